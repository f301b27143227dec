from fractions import Fraction

import numpy as np
import pytest
import scipy.sparse as sp

from nagaoka.corpus import complete4, pair2, square_diag4, triangle3
from nagaoka.errors import AmbiguousSpinError
from nagaoka.hamiltonian import assemble_nagaoka_sector
from nagaoka.manybody import SparseHermitian
from nagaoka.model import LatticeModel
from nagaoka.sector import sector_magnetizations
from nagaoka.spectral import (
    default_resolvent_z,
    eig_lowest,
    energy_split_bound,
    ground_report,
    operator_norm,
    resolve_total_spin,
    resolvent_gap,
)


def test_eig_lowest_small_cases():
    vals, vecs = eig_lowest(np.array([[0.0, -1.0], [-1.0, 0.0]]), 2)
    assert np.allclose(vals, [-1.0, 1.0])
    ground = vecs[:, 0] * np.sign(vecs[0, 0])
    assert np.allclose(ground, np.full(2, 1 / np.sqrt(2)))

    diag = np.diag([3.0, -2.0, 7.0, 0.5])
    vals, _ = eig_lowest(diag, 4)
    assert np.allclose(vals, sorted(np.diag(diag)))


def test_eig_lowest_dense_oracle_200():
    rng = np.random.default_rng(42)
    a = rng.standard_normal((200, 200)) + 1j * rng.standard_normal((200, 200))
    a = a + a.conj().T
    vals, _ = eig_lowest(a, 5)
    reference = np.linalg.eigvalsh(a)[:5]
    assert np.max(np.abs(vals - reference)) <= 1e-9


def test_eig_lowest_krylov_path_matches_dense():
    rng = np.random.default_rng(1)
    n = 2500                      # above the dense crossover
    main = rng.standard_normal(n)
    off = rng.standard_normal(n - 1) * 0.5
    mat = sp.diags([main, off, off], offsets=[0, 1, -1]).tocsr()
    vals, vecs = eig_lowest(SparseHermitian(mat), 3)
    dense = np.linalg.eigvalsh(mat.toarray())[:3]
    assert np.max(np.abs(vals - dense)) <= 1e-9
    for i in range(3):
        res = np.linalg.norm(mat @ vecs[:, i] - vals[i] * vecs[:, i])
        assert res <= 1e-10 * (1 + abs(vals[i]))


def test_eig_lowest_count_validation():
    with pytest.raises(ValueError):
        eig_lowest(np.eye(3), 4)


def test_operator_norm():
    assert np.isclose(operator_norm(np.eye(7)), 1.0)
    assert np.isclose(operator_norm(np.diag([3.0, -4.0])), 4.0)
    rng = np.random.default_rng(8)
    a = rng.standard_normal((50, 50))
    assert abs(operator_norm(a) - np.linalg.svd(a, compute_uv=False)[0]) <= 1e-7
    assert operator_norm(np.zeros((4, 4))) == 0.0


def test_ground_report_complete4():
    rep = ground_report(assemble_nagaoka_sector(complete4(), Fraction(1, 2)))
    assert rep.resolved_s == Fraction(3, 2)
    assert rep.degeneracy == 1
    assert rep.gap > 0
    assert abs(rep.ground_energy + 3.0) <= 1e-12


def test_polarized_sector_always_maximal_spin():
    for model in (pair2(), triangle3(), complete4()):
        top = sector_magnetizations(model.sites)[-1]
        rep = ground_report(assemble_nagaoka_sector(model, top))
        assert float(rep.resolved_s) == (model.sites - 1) / 2


def test_sector_energies_agree_for_connected_models():
    for model in (triangle3(), complete4(), square_diag4()):
        energies = [ground_report(assemble_nagaoka_sector(model, m)).ground_energy
                    for m in sector_magnetizations(model.sites)]
        assert max(energies) - min(energies) <= 1e-10


def test_report_invariant_under_site_relabeling():
    model = square_diag4()
    rng = np.random.default_rng(4)
    perm = rng.permutation(4)
    relabeled = LatticeModel(4, model.hopping[np.ix_(perm, perm)])
    for m in sector_magnetizations(4):
        a = ground_report(assemble_nagaoka_sector(model, m))
        b = ground_report(assemble_nagaoka_sector(relabeled, m))
        assert abs(a.ground_energy - b.ground_energy) <= 1e-12
        assert a.resolved_s == b.resolved_s
        assert a.degeneracy == b.degeneracy


def test_resolve_total_spin_rejects_ambiguity():
    with pytest.raises(AmbiguousSpinError):
        resolve_total_spin(1.3)
    assert resolve_total_spin(0.75) == Fraction(1, 2)
    assert resolve_total_spin(3.75) == Fraction(3, 2)


def test_resolvent_gap_decreases_and_scales():
    model = complete4()
    z = default_resolvent_z(model)
    us = [1e2, 1e3, 1e4, 1e5]
    deltas = [resolvent_gap(model, u, z) for u in us]
    assert all(b < a for a, b in zip(deltas, deltas[1:]))
    products = [d * u for d, u in zip(deltas, us)]
    assert max(products) / min(products) <= 1.01       # the 1/U law


def test_resolvent_gap_exact_when_no_double_occupancy():
    assert resolvent_gap(pair2(), 1e6) <= 1e-12


def test_finite_u_ground_energy_converges_to_projected_value():
    """On the open chain the finite-U ground sits below the projected value
    by a superexchange correction that dies off like 1/U."""
    from nagaoka.corpus import chain3
    from nagaoka.hamiltonian import assemble_hubbard_full

    model = chain3()
    limit = min(np.linalg.eigvalsh(assemble_nagaoka_sector(model, m).op.toarray())[0]
                for m in sector_magnetizations(3))
    gaps = {}
    for u in (1e2, 1e3, 1e4):
        e_u = np.linalg.eigvalsh(assemble_hubbard_full(model, u).toarray())[0]
        assert e_u <= limit + 1e-12          # double occupancy only lowers the energy
        gaps[u] = limit - e_u
    assert gaps[1e3] < gaps[1e2] and gaps[1e4] < gaps[1e3]
    products = [u * gap for u, gap in gaps.items()]
    assert max(products) / min(products) <= 1.01


def test_resolvent_gap_rejects_real_z():
    with pytest.raises(ValueError):
        resolvent_gap(pair2(), 10.0, z=1.0 + 0.0j)


def test_energy_split_equality_at_zero_u():
    split = energy_split_bound(complete4(), 0.0)
    assert split.bound_ok
    assert np.isclose(split.e_h1, split.c_const)


def test_energy_split_trivial_complement():
    split = energy_split_bound(pair2(), 123.0)
    assert split.bound_ok
    assert split.e_h1 == np.inf
