import numpy as np
import pytest
import scipy.sparse as sp
from scipy.io import mmread

import cavityvem as cv
from cavityvem.assembly import build_dof_map, export_system, kernel_dimension_oracle
from conftest import get_mesh
from helpers import unit_square_cell
from rt0_oracle import rt0_global


# ------------------------------------------------------------------- dof map


def test_dof_counts_on_small_meshes(two_cells):
    assert build_dof_map(two_cells).n_dofs == 1
    assert build_dof_map(get_mesh("rect", 1)).n_dofs == 0
    assert build_dof_map(get_mesh("rect", 2)).n_dofs == 4
    # every interior edge carries one moment at the lowest order
    mesh = get_mesh("rect", 7)
    assert build_dof_map(mesh).n_dofs == int((~mesh.boundary_edge).sum())


def test_unconstrained_map_keeps_boundary_moments():
    mesh = get_mesh("rect", 2)
    assert build_dof_map(mesh, constrained=False).n_dofs == mesh.n_edges


def test_dof_count_at_higher_degree():
    mesh = get_mesh("rect", 3)
    ni = int((~mesh.boundary_edge).sum())
    for k in (1, 2):
        nk = (k + 1) * (k + 2) // 2
        expected = ni * (k + 1) + mesh.n_cells * (nk - 1)
        assert build_dof_map(mesh, k).n_dofs == expected


def test_shared_edge_signs_are_opposite(two_cells):
    dofmap = build_dof_map(two_cells)
    idx0, sgn0, _ = dofmap.cell_dofs(0)
    idx1, sgn1, _ = dofmap.cell_dofs(1)
    l0 = int(np.flatnonzero(idx0 == 0)[0])
    l1 = int(np.flatnonzero(idx1 == 0)[0])
    assert sgn0[l0] * sgn1[l1] == -1.0


# ------------------------------------------------------------------ assembly


@pytest.mark.parametrize("sigma", [0.0, 2.0**-4, 1.0])
def test_two_square_closed_form(two_cells, sigma):
    system = cv.assemble(two_cells, 0, sigma)
    assert system.K.shape == (1, 1)
    assert system.K[0, 0] == pytest.approx(2.0, abs=1e-13)
    assert system.M[0, 0] == pytest.approx(0.5 + sigma, abs=1e-13)


def test_global_matrices_are_symmetric():
    system = cv.assemble(get_mesh("hex", 5), 0, 0.7)
    for A in (system.K, system.M):
        d = abs(A - A.T)
        assert d.max() <= 1e-13 * abs(A).max()


def test_stiffness_psd_and_mass_pd():
    system = cv.assemble(get_mesh("tri", 4), 0, 1.0)
    K = system.K.toarray()
    M = system.M.toarray()
    assert np.linalg.eigvalsh(K).min() > -1e-10
    assert np.linalg.eigvalsh(M).min() > 1e-12


def test_stiffness_rank_counts_cells():
    # div maps onto the mean-zero piecewise constants: rank = n_cells - 1
    for family, n in (("rect", 3), ("tri", 2), ("hex", 3)):
        mesh = get_mesh(family, n)
        system = cv.assemble(mesh, 0, 1.0)
        ker = kernel_dimension_oracle(system.K)
        assert system.n_dofs - ker == mesh.n_cells - 1


def test_kernel_dimension_oracle_examples():
    assert kernel_dimension_oracle(cv.assemble(get_mesh("rect", 2), 0, 1.0).K) == 1
    assert kernel_dimension_oracle(cv.assemble(get_mesh("rect", 4), 0, 1.0).K) == 9


def test_kernel_dimension_oracle_refuses_large_matrices():
    with pytest.raises(ValueError):
        kernel_dimension_oracle(sp.eye(5001, format="csr"))


def test_single_cell_unconstrained_assembly_scatters_local_matrices():
    verts = unit_square_cell()
    mesh = cv.PolygonalMesh(verts, [[0, 1, 2, 3]])
    system = cv.assemble(mesh, 0, 0.3, constrained=False)
    ops = system.local_ops(0)
    idx, sgn, _ = system.dofmap.cell_dofs(0)
    S = np.diag(sgn)
    K = np.zeros((4, 4))
    M = np.zeros((4, 4))
    K[np.ix_(idx, idx)] = S @ ops.stiffness @ S
    M[np.ix_(idx, idx)] = S @ ops.mass @ S
    assert np.allclose(system.K.toarray(), K, atol=1e-14)
    assert np.allclose(system.M.toarray(), M, atol=1e-14)


def test_congruence_cache_reuses_operators_without_changing_results():
    mesh = get_mesh("rect", 6)
    system = cv.assemble(mesh, 0, 1.0)
    # all cells of a structured rectangular mesh share one congruence class
    assert len(system._ops_cache) == 1
    # cached operators agree with a fresh, uncached construction per cell
    from cavityvem.element import LocalOperators
    from cavityvem.mesh import element_geometry

    for ci in (0, 7, 35):
        _, _, dirs = system.dofmap.cell_dofs(ci)
        fresh = LocalOperators(element_geometry(mesh.cell_vertices(ci)), 0, 1.0, dirs)
        assert np.allclose(system.local_ops(ci).stiffness, fresh.stiffness, atol=1e-14)
        assert np.allclose(system.local_ops(ci).mass, fresh.mass, atol=1e-14)


def test_local_dof_gathering_matches_cell_dofs(two_cells):
    system = cv.assemble(two_cells, 0, 1.0)
    vec = np.array([2.5])
    idx, sgn, _ = system.dofmap.cell_dofs(0)
    local = system.local_dof_values(0, vec)
    expected = np.where(idx >= 0, sgn * vec[np.maximum(idx, 0)], 0.0)
    assert np.allclose(local, expected)


# -------------------------------------------------- independent cross-checks


def test_divergence_stiffness_matches_raviart_thomas_on_triangles():
    for n in (2, 4, 8):
        mesh = get_mesh("tri", n)
        system = cv.assemble(mesh, 0, 1.0)
        K_rt, M_rt = rt0_global(mesh)
        diff = abs(system.K - K_rt).max()
        assert diff <= 1e-12 * abs(K_rt).max()
        # the stabilized mass is a different inner product than the exact one
        assert abs(system.M - M_rt).max() > 1e-2 * abs(M_rt).max()


def test_matrix_market_export_round_trip(tmp_path):
    system = cv.assemble(get_mesh("hex", 4), 0, 0.5)
    kpath, mpath = export_system(system, str(tmp_path / "pencil"))
    K = mmread(kpath).tocsr()
    M = mmread(mpath).tocsr()
    assert abs(K - system.K).max() < 1e-15
    assert abs(M - system.M).max() < 1e-15
