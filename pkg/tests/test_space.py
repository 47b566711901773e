"""Global degrees of freedom: dimension counts, scatter/gather, conformity."""

import numpy as np
import pytest

from ddivfem.mesh import EX1_CORNERS, make_lshape, make_parallelogram_domain
from ddivfem.piola import BasisCache
from ddivfem.space import build_dof_map, cell_coefficients, check_conformity


def formula(mesh):
    return 4 * mesh.num_edges + 4 * mesh.num_cells - len(mesh.interior_vertices)


def test_dimension_formula_on_both_domains():
    meshes = [make_parallelogram_domain(EX1_CORNERS, lvl) for lvl in range(4)]
    meshes += [make_lshape(lvl) for lvl in range(4)]
    for mesh in meshes:
        dofmap = build_dof_map(mesh)
        assert dofmap.ndofs == formula(mesh)


def test_frozen_dimension_values():
    assert build_dof_map(make_parallelogram_domain(EX1_CORNERS, 1)).ndofs == 63
    assert build_dof_map(make_lshape(0)).ndofs == 52
    assert build_dof_map(make_lshape(1)).ndofs == 171


def test_one_jump_eliminated_per_interior_vertex():
    mesh = make_lshape(2)
    dofmap = build_dof_map(mesh)
    assert len(dofmap.eliminated) == len(mesh.interior_vertices)
    for (k, c), partners in dofmap.eliminated.items():
        n0 = mesh.cells[k][c]
        patch = mesh.vertex_cells[n0]
        assert (k, c) in patch
        assert len(partners) == len(patch) - 1
        assert dofmap.jump_id[(k, c)] == -1


def test_gather_scatter_are_transposes():
    mesh = make_lshape(1)
    dofmap = build_dof_map(mesh)
    rng = np.random.default_rng(11)
    x = rng.standard_normal(dofmap.ndofs)
    for k in range(mesh.num_cells):
        w = rng.standard_normal(20)
        y = np.zeros(dofmap.ndofs)
        dofmap.scatter_add(y, k, w)
        assert np.dot(dofmap.gather(x, k), w) == pytest.approx(np.dot(x, y), rel=1e-13)


def test_cell_incidence_matches_gather():
    mesh = make_parallelogram_domain(EX1_CORNERS, 1)
    dofmap = build_dof_map(mesh)
    rng = np.random.default_rng(5)
    x = rng.standard_normal(dofmap.ndofs)
    for k in range(mesh.num_cells):
        gids, P = dofmap.cell_incidence(k)
        assert np.allclose(P @ x[gids], dofmap.gather(x, k), atol=1e-14)


def test_any_coefficient_vector_is_conforming():
    # the numbering shares edge dofs and eliminates one jump per interior
    # vertex, so every global vector describes a conforming tensor field
    mesh = make_parallelogram_domain(EX1_CORNERS, 2)
    dofmap = build_dof_map(mesh)
    cache = BasisCache()
    rng = np.random.default_rng(23)
    for _ in range(3):
        m = rng.standard_normal(dofmap.ndofs)
        report = check_conformity(mesh, dofmap, m, cache=cache)
        assert report["max_violation"] < 1e-12 * max(1.0, np.abs(m).max())


def test_conformity_check_catches_raw_coefficients():
    # bypassing the dof map with independent per-cell coefficients must
    # produce interface violations
    mesh = make_parallelogram_domain(EX1_CORNERS, 1)
    dofmap = build_dof_map(mesh)
    cache = BasisCache()
    rng = np.random.default_rng(2)
    raw = rng.standard_normal((mesh.num_cells, 20))
    report = check_conformity(mesh, dofmap, raw, cache=cache)
    assert report["max_violation"] > 0.1


def test_conformity_of_mapped_coefficients():
    mesh = make_lshape(1)
    dofmap = build_dof_map(mesh)
    cache = BasisCache()
    rng = np.random.default_rng(17)
    m = rng.standard_normal(dofmap.ndofs)
    coeffs = cell_coefficients(mesh, dofmap, cache, m)
    assert coeffs.shape == (mesh.num_cells, 20)
    report = check_conformity(mesh, dofmap, coeffs, cache=cache)
    assert report["max_violation"] < 1e-12 * max(1.0, np.abs(m).max())
