"""Boundary element trace spaces on segment/triangle meshes.

Two families: P0 (piecewise constant, one dof per element) and P1
(continuous piecewise linear, one dof per vertex).  Dof numbering follows
mesh element/vertex order.  Spaces on nested meshes are nested in the
parametric sense: prolongation is combinatorial (midpoint averaging), which
is exact under the parent-map correspondence even when refinement projects
new vertices onto an analytic surface.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import Mesh
from .special import gauss_legendre_01

P0 = "P0"
P1 = "P1"


@dataclass(frozen=True, eq=False)
class TraceSpace:
    mesh: Mesh
    family: str

    def __post_init__(self):
        if self.family not in (P0, P1):
            raise ValueError(f"family must be 'P0' or 'P1', got {self.family!r}")

    @property
    def n_dofs(self) -> int:
        return self.mesh.n_elements if self.family == P0 else self.mesh.n_vertices

    @property
    def element_dofs(self) -> np.ndarray:
        """Dof indices per element, shape (ne, 1) for P0, (ne, dim) for P1."""
        if self.family == P0:
            return np.arange(self.mesh.n_elements, dtype=np.int64)[:, None]
        return self.mesh.elements

    def basis_at(self, ref: np.ndarray) -> np.ndarray:
        """Shape functions at reference points, shape (q, n_local).

        Reference coordinates: s in [0,1] on segments (columns (s,)); (u, v)
        barycentric-style on triangles with x = A + u(B-A) + v(C-A).
        """
        ref = np.atleast_2d(ref)
        if self.family == P0:
            return np.ones((ref.shape[0], 1))
        if self.mesh.dim == 2:
            s = ref[:, 0]
            return np.stack([1.0 - s, s], axis=1)
        u, v = ref[:, 0], ref[:, 1]
        return np.stack([1.0 - u - v, u, v], axis=1)

    def interpolate(self, fn) -> np.ndarray:
        """Nodal interpolation: vertices for P1, element midpoints for P0."""
        if self.family == P1:
            return np.asarray(fn(self.mesh.vertices))
        return np.asarray(fn(self.mesh.centroids))


def build_space(mesh: Mesh, family: str) -> TraceSpace:
    return TraceSpace(mesh, family)


# ---------------------------------------------------------------------------
# Quadrature on elements
# ---------------------------------------------------------------------------

def reference_rule(dim: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Reference quadrature: [0,1] Gauss for segments, Duffy-collapsed tensor
    Gauss on the unit triangle {u,v >= 0, u+v <= 1} (weights sum to 1/2)."""
    x, w = gauss_legendre_01(order)
    if dim == 2:
        return x[:, None], w
    s, t = np.meshgrid(x, x, indexing="ij")
    u = s * (1.0 - t)
    v = s * t
    ww = (w[:, None] * w[None, :] * s).ravel()
    return np.stack([u.ravel(), v.ravel()], axis=1), ww


def physical_points(mesh: Mesh, ref: np.ndarray) -> np.ndarray:
    """Map reference points to every element, shape (ne, q, dim)."""
    c = mesh.corners
    if mesh.dim == 2:
        s = ref[:, 0]
        return c[:, None, 0, :] + s[None, :, None] * (c[:, None, 1, :] - c[:, None, 0, :])
    u, v = ref[:, 0], ref[:, 1]
    return (c[:, None, 0, :]
            + u[None, :, None] * (c[:, None, 1, :] - c[:, None, 0, :])
            + v[None, :, None] * (c[:, None, 2, :] - c[:, None, 0, :]))


def quadrature_weights(mesh: Mesh, ref_w: np.ndarray) -> np.ndarray:
    """Surface-measure weights per element/point, shape (ne, q)."""
    jac = mesh.measures if mesh.dim == 2 else 2.0 * mesh.measures
    return jac[:, None] * ref_w[None, :]


# ---------------------------------------------------------------------------
# Mass matrices (exact on affine elements)
# ---------------------------------------------------------------------------

def mass_matrix(test: TraceSpace, trial: TraceSpace) -> sp.csr_matrix:
    """Galerkin pairing M[i,j] = int_Gamma phi_j psi_i dGamma (sparse, real)."""
    if test.mesh is not trial.mesh:
        raise ValueError("mass matrix requires test and trial on the same mesh")
    mesh = test.mesh
    meas = mesh.measures
    if mesh.dim == 2:
        local = {
            (P0, P0): np.array([[1.0]]),
            (P0, P1): np.array([[0.5, 0.5]]),
            (P1, P0): np.array([[0.5], [0.5]]),
            (P1, P1): np.array([[2.0, 1.0], [1.0, 2.0]]) / 6.0,
        }[(test.family, trial.family)]
    else:
        local = {
            (P0, P0): np.array([[1.0]]),
            (P0, P1): np.full((1, 3), 1.0 / 3.0),
            (P1, P0): np.full((3, 1), 1.0 / 3.0),
            (P1, P1): (np.ones((3, 3)) + np.eye(3)) / 12.0,
        }[(test.family, trial.family)]
    rows_d = test.element_dofs
    cols_d = trial.element_dofs
    blocks = meas[:, None, None] * local[None, :, :]
    rows = np.broadcast_to(rows_d[:, :, None], blocks.shape).ravel()
    cols = np.broadcast_to(cols_d[:, None, :], blocks.shape).ravel()
    m = sp.coo_matrix((blocks.ravel(), (rows, cols)),
                      shape=(test.n_dofs, trial.n_dofs))
    return m.tocsr()


# ---------------------------------------------------------------------------
# Prolongation between nested spaces
# ---------------------------------------------------------------------------

def _one_level_prolongation(fine: Mesh, family: str) -> sp.csr_matrix:
    coarse = fine.parent_mesh
    if coarse is None:
        raise ValueError("mesh has no parent: cannot prolong")
    if family == P0:
        rows = np.arange(fine.n_elements)
        return sp.coo_matrix((np.ones(fine.n_elements), (rows, fine.parents)),
                             shape=(fine.n_elements, coarse.n_elements)).tocsr()
    nvc = coarse.n_vertices
    rows, cols = [], []
    if fine.dim == 2:
        # child layout per parent (a, b): [a, m], [m, b]; m bisects (a, b)
        mids = fine.elements[0::2, 1]
        ends = coarse.elements
        for k in range(2):
            rows.append(mids)
            cols.append(ends[:, k])
    else:
        # child layout: [a,ab,ca],[ab,b,bc],[ca,bc,c],[ab,bc,ca]
        ab = fine.elements[0::4, 1]
        ca = fine.elements[0::4, 2]
        bc = fine.elements[1::4, 2]
        tri = coarse.elements
        for mid, (i, j) in ((ab, (0, 1)), (bc, (1, 2)), (ca, (2, 0))):
            for k in (i, j):
                rows.append(mid)
                cols.append(tri[:, k])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    # a midpoint shared by two parent triangles is registered twice: dedupe
    keys = np.unique(rows.astype(np.int64) * nvc + cols)
    rows = keys // nvc
    cols = keys % nvc
    rows = np.concatenate([np.arange(nvc), rows])
    cols = np.concatenate([np.arange(nvc), cols])
    vals = np.concatenate([np.ones(nvc), np.full(len(keys), 0.5)])
    return sp.coo_matrix((vals, (rows, cols)),
                         shape=(fine.n_vertices, nvc)).tocsr()


def prolongation_matrix(from_space: TraceSpace, to_space: TraceSpace) -> sp.csr_matrix:
    """Sparse dof map from a coarse space onto a finer nested space."""
    if from_space.family != to_space.family:
        raise ValueError("prolongation requires matching families")
    chain = []
    mesh = to_space.mesh
    while mesh is not None and mesh is not from_space.mesh:
        chain.append(mesh)
        mesh = mesh.parent_mesh
    if mesh is None:
        raise ValueError("spaces are not on an ancestor/descendant mesh pair")
    op = None
    for fine in reversed(chain):
        step = _one_level_prolongation(fine, from_space.family)
        op = step if op is None else step @ op
    if op is None:  # same mesh
        op = sp.identity(from_space.n_dofs, format="csr")
    return op


def prolong(coeffs: np.ndarray, from_space: TraceSpace, to_space: TraceSpace) -> np.ndarray:
    """Represent a coarse-space function exactly in a finer nested space."""
    return prolongation_matrix(from_space, to_space) @ np.asarray(coeffs)


# ---------------------------------------------------------------------------
# Pointwise evaluation in the parent-map correspondence
# ---------------------------------------------------------------------------

def _descend(mesh_chain: list[Mesh], elem: int, ref: np.ndarray) -> tuple[int, np.ndarray]:
    """Track a parametric point from the chain's coarsest mesh to the finest."""
    for fine in mesh_chain:
        if fine.dim == 2:
            s = ref[0]
            if s <= 0.5:
                elem, ref = 2 * elem, np.array([2 * s])
            else:
                elem, ref = 2 * elem + 1, np.array([2 * s - 1.0])
        else:
            u, v = ref
            if u + v <= 0.5:
                elem, ref = 4 * elem, np.array([2 * u, 2 * v])
            elif u >= 0.5:
                elem, ref = 4 * elem + 1, np.array([2 * u - 1.0, 2 * v])
            elif v >= 0.5:
                elem, ref = 4 * elem + 2, np.array([2 * u, 2 * v - 1.0])
            else:
                elem, ref = 4 * elem + 3, np.array([2 * v - 1.0 + 2 * u, 1.0 - 2 * u])
    return elem, ref


def evaluate(space: TraceSpace, coeffs: np.ndarray, elem: int, ref: np.ndarray):
    """Evaluate a dof vector at a reference point of one element."""
    basis = space.basis_at(np.atleast_2d(ref))[0]
    dofs = space.element_dofs[elem]
    return np.asarray(coeffs)[dofs] @ basis


def descend_point(coarse: Mesh, fine: Mesh, elem: int, ref: np.ndarray) -> tuple[int, np.ndarray]:
    """Map a coarse (element, reference point) to its fine-mesh counterpart
    under the parent-map correspondence."""
    chain = []
    mesh = fine
    while mesh is not None and mesh is not coarse:
        chain.append(mesh)
        mesh = mesh.parent_mesh
    if mesh is None:
        raise ValueError("meshes are not an ancestor/descendant pair")
    return _descend(list(reversed(chain)), elem, np.asarray(ref, float))


# ---------------------------------------------------------------------------
# Surface differential operators (per-element constants on affine meshes)
# ---------------------------------------------------------------------------

def surface_gradient(space: TraceSpace, coeffs: np.ndarray) -> np.ndarray:
    """Tangential gradient of a P1 function, one constant vector per element."""
    if space.family != P1:
        raise ValueError("surface_gradient requires a P1 space")
    mesh = space.mesh
    u = np.asarray(coeffs)
    c = mesh.corners
    if mesh.dim == 2:
        du = u[mesh.elements[:, 1]] - u[mesh.elements[:, 0]]
        t = c[:, 1] - c[:, 0]
        length = np.linalg.norm(t, axis=1)
        return (du / length ** 2)[:, None] * t
    e1 = c[:, 1] - c[:, 0]
    e2 = c[:, 2] - c[:, 0]
    n = mesh.normals
    rhs = np.stack([u[mesh.elements[:, 1]] - u[mesh.elements[:, 0]],
                    u[mesh.elements[:, 2]] - u[mesh.elements[:, 0]],
                    np.zeros(mesh.n_elements, dtype=u.dtype)], axis=1)
    mats = np.stack([e1, e2, n], axis=1)
    return np.linalg.solve(mats, rhs[:, :, None])[:, :, 0]


def surface_curl(space: TraceSpace, coeffs: np.ndarray) -> np.ndarray:
    """Vector surface curl n x grad_G of a P1 function (3D only)."""
    mesh = space.mesh
    if mesh.dim != 3:
        raise ValueError("surface_curl is a 3D operation")
    g = surface_gradient(space, coeffs)
    return np.cross(mesh.normals, g)
