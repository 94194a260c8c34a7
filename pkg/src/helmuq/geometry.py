"""Closed surface meshes: 2D segment curves and 3D triangulations.

Meshes are immutable after construction and carry a refinement hierarchy
(level + parent map).  Refinement is midpoint subdivision: 1 -> 2 for
segments, red 1 -> 4 for triangles, with new vertices pushed onto the
analytic surface when one is attached.  Normals point into the exterior
domain; orientation is counter-clockwise in 2D and outward in 3D.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np


# ---------------------------------------------------------------------------
# Analytic surfaces
# ---------------------------------------------------------------------------

class AnalyticSurface:
    """Exact geometry attached to a mesh: normals, mean curvature, projection."""

    kind: str = "abstract"

    def normal(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def curvature(self, x: np.ndarray) -> np.ndarray:
        """Mean curvature div(n) at on-surface points."""
        raise NotImplementedError

    def project(self, x: np.ndarray) -> np.ndarray:
        """Closest-point style projection of nearby points onto the surface."""
        raise NotImplementedError


@dataclass(frozen=True)
class Circle(AnalyticSurface):
    radius: float = 1.0
    center: tuple[float, float] = (0.0, 0.0)
    kind: str = "circle"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"circle radius must be positive, got {self.radius}")

    def normal(self, x):
        d = np.asarray(x, float) - np.asarray(self.center)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature(self, x):
        return np.full(np.shape(x)[:-1], 1.0 / self.radius)

    def project(self, x):
        c = np.asarray(self.center)
        d = np.asarray(x, float) - c
        return c + self.radius * d / np.linalg.norm(d, axis=-1, keepdims=True)

    def point(self, theta):
        theta = np.asarray(theta, float)
        c = np.asarray(self.center)
        return c + self.radius * np.stack([np.cos(theta), np.sin(theta)], axis=-1)


@dataclass(frozen=True)
class Sphere(AnalyticSurface):
    radius: float = 1.0
    center: tuple[float, float, float] = (0.0, 0.0, 0.0)
    kind: str = "sphere"

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError(f"sphere radius must be positive, got {self.radius}")

    def normal(self, x):
        d = np.asarray(x, float) - np.asarray(self.center)
        return d / np.linalg.norm(d, axis=-1, keepdims=True)

    def curvature(self, x):
        return np.full(np.shape(x)[:-1], 2.0 / self.radius)

    def project(self, x):
        c = np.asarray(self.center)
        d = np.asarray(x, float) - c
        return c + self.radius * d / np.linalg.norm(d, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Kite2D(AnalyticSurface):
    """Kite-shaped benchmark profile (cos t + c2 cos 2t - c2, c3 sin t)."""

    c2: float = 0.65
    c3: float = 1.5
    kind: str = "kite2d"

    def point(self, theta):
        theta = np.asarray(theta, float)
        x = np.cos(theta) + self.c2 * np.cos(2 * theta) - self.c2
        y = self.c3 * np.sin(theta)
        return np.stack([x, y], axis=-1)

    def _tangent(self, theta):
        theta = np.asarray(theta, float)
        dx = -np.sin(theta) - 2 * self.c2 * np.sin(2 * theta)
        dy = self.c3 * np.cos(theta)
        return np.stack([dx, dy], axis=-1)

    def normal_at_param(self, theta):
        t = self._tangent(theta)
        t = t / np.linalg.norm(t, axis=-1, keepdims=True)
        return np.stack([t[..., 1], -t[..., 0]], axis=-1)

    def curvature_at_param(self, theta):
        theta = np.asarray(theta, float)
        dx = -np.sin(theta) - 2 * self.c2 * np.sin(2 * theta)
        dy = self.c3 * np.cos(theta)
        ddx = -np.cos(theta) - 4 * self.c2 * np.cos(2 * theta)
        ddy = -self.c3 * np.sin(theta)
        return (dx * ddy - dy * ddx) / (dx * dx + dy * dy) ** 1.5

    def nearest_param(self, x):
        """Parameter of the closest curve point (coarse scan + Newton)."""
        x = np.atleast_2d(np.asarray(x, float))
        grid = np.linspace(0.0, 2 * np.pi, 720, endpoint=False)
        pts = self.point(grid)
        d2 = ((x[:, None, :] - pts[None, :, :]) ** 2).sum(-1)
        th = grid[np.argmin(d2, axis=1)]
        for _ in range(30):
            p = self.point(th)
            tgt = self._tangent(th)
            ddx = -np.cos(th) - 4 * self.c2 * np.cos(2 * th)
            ddy = -self.c3 * np.sin(th)
            r = x - p
            f = (r * tgt).sum(-1)
            fp = (r * np.stack([ddx, ddy], -1)).sum(-1) - (tgt * tgt).sum(-1)
            step = np.where(np.abs(fp) > 1e-14, f / fp, 0.0)
            th = th - step
            if np.max(np.abs(step)) < 1e-14:
                break
        return th

    def normal(self, x):
        out = self.normal_at_param(self.nearest_param(x))
        return out[0] if np.ndim(x) == 1 else out

    def curvature(self, x):
        out = self.curvature_at_param(self.nearest_param(np.atleast_2d(x)))
        return out[0] if np.ndim(x) == 1 else out

    def project(self, x):
        out = self.point(self.nearest_param(np.atleast_2d(x)))
        return out[0] if np.ndim(x) == 1 else out


# ---------------------------------------------------------------------------
# Mesh
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Mesh:
    """Closed oriented surface mesh (segments for d=2, triangles for d=3).

    `parents[i]` is the index of element i's parent one level down; None at
    the root level.  `vertex_params` stores curve parameters for meshes on
    parametric 2D surfaces so refinement can bisect in parameter space.
    """

    dim: int
    vertices: np.ndarray
    elements: np.ndarray
    level: int = 0
    parents: Optional[np.ndarray] = None
    surface: Optional[AnalyticSurface] = None
    vertex_params: Optional[np.ndarray] = None
    parent_mesh: Optional["Mesh"] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "vertices", np.asarray(self.vertices, float))
        object.__setattr__(self, "elements", np.asarray(self.elements, np.int64))
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.vertices.shape[1] != self.dim:
            raise ValueError("vertex coordinate dimension mismatch")
        if self.elements.shape[1] != self.dim:
            raise ValueError("element arity must equal dim (pairs/triples)")
        self.vertices.setflags(write=False)
        self.elements.setflags(write=False)

    # -- derived quantities (computed lazily, cached on the instance) -------

    def _cache(self, key: str, fn):
        store = self.__dict__.setdefault("_derived", {})
        if key not in store:
            store[key] = fn()
        return store[key]

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_elements(self) -> int:
        return self.elements.shape[0]

    @property
    def corners(self) -> np.ndarray:
        """Vertex coordinates per element, shape (ne, dim, dim)."""
        return self._cache("corners", lambda: self.vertices[self.elements])

    @property
    def measures(self) -> np.ndarray:
        """Element lengths (d=2) or areas (d=3)."""
        def compute():
            c = self.corners
            if self.dim == 2:
                return np.linalg.norm(c[:, 1] - c[:, 0], axis=1)
            cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
            return 0.5 * np.linalg.norm(cr, axis=1)
        return self._cache("measures", compute)

    @property
    def normals(self) -> np.ndarray:
        """Outward unit normal per element."""
        def compute():
            c = self.corners
            if self.dim == 2:
                t = c[:, 1] - c[:, 0]
                t /= np.linalg.norm(t, axis=1, keepdims=True)
                return np.stack([t[:, 1], -t[:, 0]], axis=1)
            cr = np.cross(c[:, 1] - c[:, 0], c[:, 2] - c[:, 0])
            return cr / np.linalg.norm(cr, axis=1, keepdims=True)
        return self._cache("normals", compute)

    @property
    def centroids(self) -> np.ndarray:
        return self._cache("centroids", lambda: self.corners.mean(axis=1))

    @property
    def meshwidth(self) -> float:
        """Largest element diameter."""
        def compute():
            c = self.corners
            if self.dim == 2:
                return float(self.measures.max())
            e = max(np.linalg.norm(c[:, i] - c[:, j], axis=1).max()
                    for i, j in ((0, 1), (1, 2), (2, 0)))
            return float(e)
        return self._cache("meshwidth", compute)

    @property
    def vertex_normals(self) -> np.ndarray:
        """Unit normals at vertices: analytic when available, else
        measure-weighted average of adjacent element normals."""
        def compute():
            if self.surface is not None:
                if isinstance(self.surface, Kite2D) and self.vertex_params is not None:
                    return self.surface.normal_at_param(self.vertex_params)
                return self.surface.normal(self.vertices)
            acc = np.zeros_like(self.vertices)
            w = (self.measures * 1.0)[:, None] * self.normals
            for k in range(self.dim):
                np.add.at(acc, self.elements[:, k], w)
            return acc / np.linalg.norm(acc, axis=1, keepdims=True)
        return self._cache("vertex_normals", compute)

    def vertex_curvature(self) -> np.ndarray:
        """Mean curvature at vertices; requires an analytic surface."""
        if self.surface is None:
            raise ValueError("mesh has no analytic surface: curvature unavailable")
        if isinstance(self.surface, Kite2D) and self.vertex_params is not None:
            return self.surface.curvature_at_param(self.vertex_params)
        return self.surface.curvature(self.vertices)

    # -- invariants ----------------------------------------------------------

    def validate(self) -> None:
        """Raise ValueError when a mesh invariant fails."""
        if np.any(self.measures <= 0):
            raise ValueError("degenerate element (zero measure)")
        if self.dim == 2:
            first = np.bincount(self.elements[:, 0], minlength=self.n_vertices)
            second = np.bincount(self.elements[:, 1], minlength=self.n_vertices)
            if not (np.all(first == 1) and np.all(second == 1)):
                raise ValueError("curve not closed / orientation inconsistent")
            if self._signed_area() <= 0:
                raise ValueError("curve orientation is clockwise (normals would point inward)")
        else:
            edges = {}
            for tri in self.elements:
                for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                    key = (min(a, b), max(a, b))
                    edges.setdefault(key, []).append((a, b))
            for key, lst in edges.items():
                if len(lst) != 2:
                    raise ValueError(f"edge {key} shared by {len(lst)} triangles (surface not closed)")
                if lst[0] == lst[1]:
                    raise ValueError(f"inconsistent orientation across edge {key}")
            if self._signed_volume() <= 0:
                raise ValueError("triangle orientation points inward")

    def _signed_area(self) -> float:
        c = self.corners
        return float(0.5 * np.sum(c[:, 0, 0] * c[:, 1, 1] - c[:, 1, 0] * c[:, 0, 1]))

    def _signed_volume(self) -> float:
        c = self.corners
        return float(np.einsum("ij,ij->", c[:, 0], np.cross(c[:, 1], c[:, 2])) / 6.0)

    def shape_regularity(self) -> float:
        """Max circumradius/inradius ratio over triangles (3D only)."""
        if self.dim == 2:
            return 1.0
        c = self.corners
        a = np.linalg.norm(c[:, 1] - c[:, 2], axis=1)
        b = np.linalg.norm(c[:, 2] - c[:, 0], axis=1)
        cc = np.linalg.norm(c[:, 0] - c[:, 1], axis=1)
        s = 0.5 * (a + b + cc)
        area = self.measures
        inradius = area / s
        circum = a * b * cc / (4.0 * area)
        return float(np.max(circum / inradius))

    def without_surface(self) -> "Mesh":
        return replace(self, surface=None, vertex_params=None)


# ---------------------------------------------------------------------------
# Builders
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceSpec:
    """Descriptor for the built-in base geometries.

    kind: circle | kite2d | box2d | sphere
    radius/center: circle and sphere; half_widths/center: box2d;
    base_n: base segment count (2D, per full curve for circle/kite and per
    side for box2d).
    """

    kind: str
    radius: float = 1.0
    center: tuple = (0.0, 0.0)
    half_widths: tuple = (0.5, 0.5)
    base_n: int = 16


def build_surface(spec: SurfaceSpec, level: int = 0) -> Mesh:
    """Build a base mesh and refine it `level` times."""
    if level < 0:
        raise ValueError(f"level must be >= 0, got {level}")
    kind = spec.kind.lower()
    if kind == "circle":
        mesh = _base_circle(spec)
    elif kind == "kite2d":
        mesh = _base_kite(spec)
    elif kind == "box2d":
        mesh = _base_box2d(spec)
    elif kind == "sphere":
        mesh = _base_sphere(spec)
    else:
        raise ValueError(f"unknown surface kind {spec.kind!r}")
    for _ in range(level):
        mesh = refine(mesh)
    return mesh


def _base_circle(spec: SurfaceSpec) -> Mesh:
    surf = Circle(radius=spec.radius, center=tuple(spec.center)[:2])
    n = int(spec.base_n)
    if n < 3:
        raise ValueError("circle base mesh needs at least 3 segments")
    theta = 2 * np.pi * np.arange(n) / n
    verts = surf.point(theta)
    elems = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    return Mesh(2, verts, elems, level=0, surface=surf, vertex_params=theta)


def _base_kite(spec: SurfaceSpec) -> Mesh:
    surf = Kite2D()
    n = int(spec.base_n)
    if n < 3:
        raise ValueError("kite base mesh needs at least 3 segments")
    theta = 2 * np.pi * np.arange(n) / n
    verts = surf.point(theta)
    elems = np.stack([np.arange(n), (np.arange(n) + 1) % n], axis=1)
    return Mesh(2, verts, elems, level=0, surface=surf, vertex_params=theta)


def _base_box2d(spec: SurfaceSpec) -> Mesh:
    cx, cy = spec.center[0], spec.center[1]
    hx, hy = spec.half_widths
    if hx <= 0 or hy <= 0:
        raise ValueError("box half-widths must be positive")
    n = int(spec.base_n)
    corners = np.array([[cx - hx, cy - hy], [cx + hx, cy - hy],
                        [cx + hx, cy + hy], [cx - hx, cy + hy]])
    pts = []
    for k in range(4):
        a, b = corners[k], corners[(k + 1) % 4]
        for i in range(n):
            pts.append(a + (b - a) * i / n)
    verts = np.asarray(pts)
    m = len(pts)
    elems = np.stack([np.arange(m), (np.arange(m) + 1) % m], axis=1)
    return Mesh(2, verts, elems, level=0)


def _base_sphere(spec: SurfaceSpec) -> Mesh:
    surf = Sphere(radius=spec.radius, center=tuple(spec.center) if len(spec.center) == 3 else (0.0, 0.0, 0.0))
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    raw = np.array([
        [-1, phi, 0], [1, phi, 0], [-1, -phi, 0], [1, -phi, 0],
        [0, -1, phi], [0, 1, phi], [0, -1, -phi], [0, 1, -phi],
        [phi, 0, -1], [phi, 0, 1], [-phi, 0, -1], [-phi, 0, 1],
    ], dtype=float)
    verts = surf.project(raw + np.asarray(surf.center))
    faces = np.array([
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ], dtype=np.int64)
    mesh = Mesh(3, verts, faces, level=0, surface=surf)
    if mesh._signed_volume() < 0:
        faces = faces[:, ::-1]
        mesh = Mesh(3, verts, faces, level=0, surface=surf)
    return mesh


# ---------------------------------------------------------------------------
# Refinement and deformation
# ---------------------------------------------------------------------------

def refine(mesh: Mesh) -> Mesh:
    """One nested refinement step: 1->2 segments, red 1->4 triangles."""
    if mesh.dim == 2:
        return _refine_curve(mesh)
    return _refine_triangles(mesh)


def _refine_curve(mesh: Mesh) -> Mesh:
    nv, ne = mesh.n_vertices, mesh.n_elements
    c = mesh.corners
    mids = 0.5 * (c[:, 0] + c[:, 1])
    params = None
    if mesh.surface is not None:
        if mesh.vertex_params is not None:
            p0 = mesh.vertex_params[mesh.elements[:, 0]]
            p1 = mesh.vertex_params[mesh.elements[:, 1]]
            dp = np.mod(p1 - p0, 2 * np.pi)
            pm = p0 + 0.5 * dp
            mids = mesh.surface.point(pm) if hasattr(mesh.surface, "point") else mesh.surface.project(mids)
            params = np.concatenate([mesh.vertex_params, np.mod(pm, 2 * np.pi)])
        else:
            mids = mesh.surface.project(mids)
    verts = np.vstack([mesh.vertices, mids])
    children = np.empty((2 * ne, 2), dtype=np.int64)
    children[0::2, 0] = mesh.elements[:, 0]
    children[0::2, 1] = nv + np.arange(ne)
    children[1::2, 0] = nv + np.arange(ne)
    children[1::2, 1] = mesh.elements[:, 1]
    parents = np.repeat(np.arange(ne, dtype=np.int64), 2)
    return Mesh(2, verts, children, level=mesh.level + 1, parents=parents,
                surface=mesh.surface, vertex_params=params, parent_mesh=mesh)


def _refine_triangles(mesh: Mesh) -> Mesh:
    nv, ne = mesh.n_vertices, mesh.n_elements
    edge_mid: dict[tuple[int, int], int] = {}
    new_pts: list[np.ndarray] = []

    def midpoint(a: int, b: int) -> int:
        key = (min(a, b), max(a, b))
        idx = edge_mid.get(key)
        if idx is None:
            idx = nv + len(new_pts)
            edge_mid[key] = idx
            new_pts.append(0.5 * (mesh.vertices[a] + mesh.vertices[b]))
        return idx

    children = np.empty((4 * ne, 3), dtype=np.int64)
    for i, (a, b, c) in enumerate(mesh.elements):
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        children[4 * i:4 * i + 4] = [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    pts = np.asarray(new_pts)
    if mesh.surface is not None:
        pts = mesh.surface.project(pts)
    verts = np.vstack([mesh.vertices, pts])
    parents = np.repeat(np.arange(ne, dtype=np.int64), 4)
    return Mesh(3, verts, children, level=mesh.level + 1, parents=parents,
                surface=mesh.surface, parent_mesh=mesh)


def deform(mesh: Mesh, velocity: Callable[[np.ndarray], np.ndarray], t: float) -> Mesh:
    """Map vertices x -> x + t*v(x); connectivity and hierarchy unchanged.

    The analytic-surface tag is dropped: the deformed surface has no exact
    geometry.  Raises when an element degenerates (t outside the
    bi-Lipschitz regime).
    """
    v = np.asarray(velocity(mesh.vertices), float)
    if v.shape != mesh.vertices.shape:
        raise ValueError(f"velocity field returned shape {v.shape}, expected {mesh.vertices.shape}")
    out = Mesh(mesh.dim, mesh.vertices + t * v, mesh.elements, level=mesh.level,
               parents=mesh.parents, surface=None, vertex_params=None)
    scale = mesh.meshwidth
    if mesh.dim == 2:
        bad = out.measures < 1e-12 * scale
    else:
        bad = out.measures < 1e-12 * scale ** 2
    if np.any(bad):
        raise ValueError(f"deformation with t={t} degenerates {int(bad.sum())} element(s)")
    return out


# ---------------------------------------------------------------------------
# Plain-ASCII and Gmsh I/O
# ---------------------------------------------------------------------------

def write_mesh(mesh: Mesh, path: str) -> None:
    """Write `dim nv ne` header, vertex lines, then 0-based element lines."""
    with open(path, "w") as f:
        f.write(f"{mesh.dim} {mesh.n_vertices} {mesh.n_elements}\n")
        for v in mesh.vertices:
            f.write(" ".join(format(x, ".17g") for x in v) + "\n")
        for e in mesh.elements:
            f.write(" ".join(str(int(i)) for i in e) + "\n")


def read_mesh(path: str) -> Mesh:
    with open(path) as f:
        tokens = f.read().split()
    dim, nv, ne = int(tokens[0]), int(tokens[1]), int(tokens[2])
    k = 3
    verts = np.array(tokens[k:k + nv * dim], float).reshape(nv, dim)
    k += nv * dim
    elems = np.array(tokens[k:k + ne * dim], np.int64).reshape(ne, dim)
    return _oriented(Mesh(dim, verts, elems))


def read_gmsh(path: str) -> Mesh:
    """Import 3-node triangles from a Gmsh ASCII v2 file."""
    nodes: dict[int, list[float]] = {}
    tris: list[list[int]] = []
    with open(path) as f:
        lines = iter(f.read().splitlines())
    for line in lines:
        if line.strip() == "$Nodes":
            count = int(next(lines))
            for _ in range(count):
                parts = next(lines).split()
                nodes[int(parts[0])] = [float(x) for x in parts[1:4]]
        elif line.strip() == "$Elements":
            count = int(next(lines))
            for _ in range(count):
                parts = next(lines).split()
                if int(parts[1]) == 2:              # 3-node triangle
                    ntags = int(parts[2])
                    tris.append([int(p) for p in parts[3 + ntags:6 + ntags]])
    if not tris:
        raise ValueError(f"no triangles found in {path}")
    ids = sorted(nodes)
    remap = {old: new for new, old in enumerate(ids)}
    verts = np.array([nodes[i] for i in ids])
    elems = np.array([[remap[i] for i in tri] for tri in tris], np.int64)
    return _oriented(Mesh(3, verts, elems))


def _oriented(mesh: Mesh) -> Mesh:
    """Flip orientation if normals point inward."""
    if mesh.dim == 2 and mesh._signed_area() < 0:
        return Mesh(2, mesh.vertices, mesh.elements[:, ::-1], level=mesh.level)
    if mesh.dim == 3 and mesh._signed_volume() < 0:
        return Mesh(3, mesh.vertices, mesh.elements[:, ::-1], level=mesh.level)
    return mesh
