import numpy as np
import pytest

from helmuq.geometry import (
    Circle, Kite2D, Mesh, Sphere, SurfaceSpec, build_surface, deform,
    read_gmsh, read_mesh, refine, write_mesh,
)


def circle_spec(n=16, radius=1.0):
    return SurfaceSpec(kind="circle", radius=radius, base_n=n)


def test_circle_level0_counts():
    mesh = build_surface(circle_spec(16), level=0)
    assert mesh.n_elements == 16 and mesh.n_vertices == 16
    mesh.validate()
    assert np.allclose(np.linalg.norm(mesh.vertices, axis=1), 1.0, atol=1e-14)


def test_sphere_level_counts():
    m0 = build_surface(SurfaceSpec(kind="sphere"), level=0)
    assert m0.n_elements == 20 and m0.n_vertices == 12
    m1 = refine(m0)
    assert m1.n_elements == 80 and m1.n_vertices == 42
    m1.validate()
    assert np.allclose(np.linalg.norm(m1.vertices, axis=1), 1.0, atol=1e-14)


def test_refine_circle_midpoints_on_radius():
    m = build_surface(circle_spec(16), level=1)
    assert m.n_elements == 32
    assert np.allclose(np.linalg.norm(m.vertices, axis=1), 1.0, atol=1e-14)


def test_area_converges_to_analytic():
    # circle perimeter -> 2*pi, sphere area -> 4*pi, monotonically from below
    errs = []
    mesh = build_surface(circle_spec(16))
    for _ in range(4):
        errs.append(abs(mesh.measures.sum() - 2 * np.pi))
        mesh = refine(mesh)
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))

    errs = []
    mesh = build_surface(SurfaceSpec(kind="sphere"))
    for _ in range(4):
        errs.append(abs(mesh.measures.sum() - 4 * np.pi))
        mesh = refine(mesh)
    assert all(e2 < e1 for e1, e2 in zip(errs, errs[1:]))


@pytest.mark.parametrize("kind", ["circle", "kite2d", "box2d", "sphere"])
def test_refinement_preserves_invariants(kind):
    mesh = build_surface(SurfaceSpec(kind=kind, base_n=8))
    for _ in range(3 if kind == "sphere" else 4):
        mesh = refine(mesh)
        mesh.validate()
    if kind == "sphere":
        assert mesh.shape_regularity() < 4.0


def test_parent_map_partitions():
    mesh = build_surface(SurfaceSpec(kind="sphere"))
    fine = refine(refine(mesh))
    # compose parent maps over 2 levels: each coarse element owns 16 descendants
    p = fine.parents
    coarse = refine(mesh).parents[p]
    counts = np.bincount(coarse, minlength=mesh.n_elements)
    assert np.all(counts == 16)

    curve = build_surface(circle_spec(8), level=0)
    f = refine(refine(refine(curve)))
    comp = f.parents
    comp = refine(refine(curve)).parents[comp]
    comp = refine(curve).parents[comp]
    assert np.all(np.bincount(comp, minlength=8) == 8)


def test_deform_t0_identity_and_constant_roundtrip():
    mesh = build_surface(circle_spec(16))
    out = deform(mesh, lambda x: np.ones_like(x), 0.0)
    assert np.array_equal(out.vertices, mesh.vertices)

    shift = np.array([0.2, -0.1])
    fwd = deform(mesh, lambda x: np.broadcast_to(shift, x.shape), 0.5)
    back = deform(fwd, lambda x: np.broadcast_to(shift, x.shape), -0.5)
    # recovery is exact up to one rounding of (x + tc) - tc per coordinate
    assert np.allclose(back.vertices, mesh.vertices, rtol=0, atol=5e-16)
    assert fwd.surface is None


def test_deform_kite_velocity_zero_at_theta0():
    # v = [(z^2-1)(cos th - 1), 0.25 sin th (1 - z^2), 0] vanishes at th = 0
    surf = Kite2D()
    mesh = build_surface(SurfaceSpec(kind="kite2d", base_n=16))
    theta = mesh.vertex_params

    def vel(x):
        th = theta  # evaluated on mesh vertices in order
        z = np.zeros_like(th)
        vx = (z ** 2 - 1) * (np.cos(th) - 1)
        vy = 0.25 * np.sin(th) * (1 - z ** 2)
        return np.stack([vx, vy], axis=1)

    out = deform(mesh, vel, 0.3)
    i0 = int(np.argmin(np.abs(theta)))
    assert theta[i0] == 0.0
    assert np.allclose(out.vertices[i0], mesh.vertices[i0])
    moved = np.linalg.norm(out.vertices - mesh.vertices, axis=1)
    assert moved.max() > 0.01


def test_deform_box_face_only():
    mesh = build_surface(SurfaceSpec(kind="box2d", half_widths=(0.5, 0.5), base_n=8))
    top = np.isclose(mesh.vertices[:, 1], 0.5)

    def vel(x):
        v = np.zeros_like(x)
        on = np.isclose(x[:, 1], 0.5)
        v[on, 1] = np.sin(np.pi * (x[on, 0] + 0.5))
        return v

    out = deform(mesh, vel, 0.05)
    dx = out.vertices - mesh.vertices
    assert np.all(dx[~top] == 0.0)
    assert np.all(dx[:, 0] == 0.0)


def test_deform_degenerate_rejected():
    mesh = build_surface(circle_spec(16))
    with pytest.raises(ValueError, match="degenerates"):
        deform(mesh, lambda x: -x, 1.0)  # collapse to the center


def test_normal_convergence_to_analytic():
    mesh = build_surface(SurfaceSpec(kind="sphere"))
    devs = []
    for _ in range(4):
        # compare with analytic normals at element corners (centroids are
        # exact by symmetry on the icosahedron, corners are not)
        exact = mesh.surface.normal(mesh.corners.reshape(-1, 3)).reshape(-1, 3, 3)
        dots = np.clip(np.einsum("ekj,ej->ek", exact, mesh.normals), -1, 1)
        devs.append(np.arccos(dots).max())
        mesh = refine(mesh)
    for d1, d2 in zip(devs, devs[1:]):
        assert d2 < d1 / 2 * 1.5


def test_curvature_values():
    circ = build_surface(circle_spec(16, radius=2.0))
    assert np.allclose(circ.vertex_curvature(), 0.5)
    sph = build_surface(SurfaceSpec(kind="sphere", radius=2.0, center=(0, 0, 0)))
    assert np.allclose(sph.vertex_curvature(), 1.0)


def test_kite_projection_idempotent():
    surf = Kite2D()
    theta = np.linspace(0.1, 6.0, 17)
    pts = surf.point(theta) + 0.02 * surf.normal_at_param(theta)
    proj = surf.project(pts)
    again = surf.project(proj)
    assert np.allclose(proj, again, atol=1e-10)
    assert np.allclose(np.linalg.norm(proj - surf.point(theta), axis=1), 0, atol=1e-6)


def test_mesh_io_roundtrip(tmp_path):
    mesh = build_surface(SurfaceSpec(kind="sphere"), level=1)
    path = tmp_path / "sphere.txt"
    write_mesh(mesh, str(path))
    back = read_mesh(str(path))
    assert back.dim == 3
    assert np.allclose(back.vertices, mesh.vertices)
    assert np.array_equal(back.elements, mesh.elements)
    back.validate()


def test_gmsh_import(tmp_path):
    # one tetrahedron surface, deliberately mis-oriented to test the flip
    content = """$MeshFormat
2.2 0 8
$EndMeshFormat
$Nodes
4
1 0 0 0
2 1 0 0
3 0 1 0
4 0 0 1
$EndNodes
$Elements
4
1 2 2 0 1 1 3 2
2 2 2 0 1 1 2 4
3 2 2 0 1 2 3 4
4 2 2 0 1 1 4 3
$EndElements
"""
    path = tmp_path / "tet.msh"
    path.write_text(content)
    mesh = read_gmsh(str(path))
    assert mesh.n_elements == 4 and mesh.n_vertices == 4
    mesh.validate()


def test_unknown_kind_and_bad_params():
    with pytest.raises(ValueError, match="unknown surface kind"):
        build_surface(SurfaceSpec(kind="torus"))
    with pytest.raises(ValueError):
        Circle(radius=0.0)
    with pytest.raises(ValueError):
        build_surface(circle_spec(16), level=-1)
