"""Element maps, the tensor pushforward, and physical degrees of freedom."""

import numpy as np
import pytest

from ddivfem.mesh import EX1_CORNERS, make_parallelogram_domain
from ddivfem.piola import (
    BasisCache,
    ElementMap,
    GeometryError,
    cell_geometry,
    element_map,
    physical_dofs,
    push_tensor,
)
from ddivfem.reference import build_reference_basis

SQUARE = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]
UNIT = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]

# physical dofs of the pushed shape tensors on the reference square meshed as
# one cell: the lattice numbering runs the north and west edges against the
# counterclockwise traversal, flipping the first-moment and mean-shear signs
IDENTITY_DOF_SIGNS = (
    [1.0] * 4
    + [1.0 / 3.0, 1.0 / 3.0, -1.0 / 3.0, -1.0 / 3.0]
    + [2.0, 2.0, -2.0, -2.0]
    + [2.0 / 3.0] * 4
    + [1.0] * 4
)


@pytest.fixture(scope="module")
def basis():
    return build_reference_basis()


def test_element_map_examples():
    emap = element_map(make_parallelogram_domain(SQUARE, 0), 0)
    assert np.allclose(emap.B, np.eye(2))
    assert np.allclose(emap.a, 0.0)
    assert emap.det == pytest.approx(1.0)

    emap = element_map(make_parallelogram_domain(UNIT, 0), 0)
    assert np.allclose(emap.B, 0.5 * np.eye(2))
    assert np.allclose(emap.a, [0.5, 0.5])
    assert emap.det == pytest.approx(0.25)

    # sheared benchmark cell: both in-plane directions pick up the shear
    emap = element_map(make_parallelogram_domain(EX1_CORNERS, 0), 0)
    assert np.allclose(emap.B, [[1.0, 0.0], [1.0, 1.0]])
    assert emap.det == pytest.approx(1.0)


def test_element_map_sends_reference_corners_to_cell():
    mesh = make_parallelogram_domain(EX1_CORNERS, 1)
    ref_corners = np.array([[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]])
    for k in range(mesh.num_cells):
        emap = element_map(mesh, k)
        mapped = emap.apply(ref_corners[:, 0], ref_corners[:, 1])
        assert np.allclose(np.transpose(mapped), mesh.vertices[mesh.cells[k]], atol=1e-14)


def test_singular_map_rejected():
    with pytest.raises(GeometryError):
        ElementMap(np.array([[1.0, 2.0], [2.0, 4.0]]), np.zeros(2))
    with pytest.raises(GeometryError):
        # negative determinant (orientation flip)
        ElementMap(np.array([[0.0, 1.0], [1.0, 0.0]]), np.zeros(2))


def test_push_tensor_value(basis):
    emap = element_map(make_parallelogram_domain(EX1_CORNERS, 0), 0)
    phi = basis[0]
    xh, yh = 0.3, -0.7
    Mhat = np.array(
        [
            [phi.axx.eval(xh, yh), phi.axy.eval(xh, yh)],
            [phi.axy.eval(xh, yh), phi.ayy.eval(xh, yh)],
        ]
    )
    want = emap.B @ Mhat @ emap.B.T / emap.det
    got = push_tensor(emap, phi, xh, yh)
    assert np.allclose(got, want, atol=1e-15)
    assert got[0, 1] == pytest.approx(got[1, 0])


def test_identity_cell_dofs_are_signed_reference_norms(basis):
    mesh = make_parallelogram_domain(SQUARE, 0)
    emap, frame = cell_geometry(mesh, 0)
    T = np.column_stack([physical_dofs(emap, frame, phi) for phi in basis])
    assert np.allclose(T, np.diag(IDENTITY_DOF_SIGNS), atol=1e-13)


def test_corner_jumps_of_pushed_edge_tensor(basis):
    # on the sheared benchmark cell the first edge tensor acquires nonzero
    # corner jumps: the pushforward preserves edge dofs, not jump values
    mesh = make_parallelogram_domain(EX1_CORNERS, 0)
    emap, frame = cell_geometry(mesh, 0)
    dofs = physical_dofs(emap, frame, basis[0])
    assert np.allclose(dofs[16:], [0.5, -0.5, 0.0, 0.0], atol=1e-13)

    # on a rectangle every non-corner tensor keeps zero jumps
    rect = make_parallelogram_domain([[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]], 0)
    emap, frame = cell_geometry(rect, 0)
    for phi in basis[:16]:
        dofs = physical_dofs(emap, frame, phi)
        assert np.abs(dofs[16:]).max() < 1e-13


def test_physical_dofs_quadrature_invariance(basis):
    # the integrands are polynomials well inside the default rule's reach,
    # so raising the order must not move the values
    mesh = make_parallelogram_domain(EX1_CORNERS, 1)
    emap, frame = cell_geometry(mesh, 2)
    for phi in (basis[0], basis[9], basis[18]):
        d4 = physical_dofs(emap, frame, phi, nq=4)
        d8 = physical_dofs(emap, frame, phi, nq=8)
        assert np.allclose(d4, d8, atol=1e-13)


def test_local_matrix_cache_collapses_uniform_mesh(basis):
    cache = BasisCache(basis)
    mesh = make_parallelogram_domain(EX1_CORNERS, 2)
    for k in range(mesh.num_cells):
        cache.get(*cell_geometry(mesh, k))
    assert len(cache) == 1

    lb = cache.get(*cell_geometry(mesh, 0))
    assert lb.cond < 1e3
    assert np.allclose(lb.Tinv @ lb.T, np.eye(20), atol=1e-12)
