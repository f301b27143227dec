from fractions import Fraction

import numpy as np
import pytest

from nagaoka.corpus import chain3, complete4, corpus_models, pair2
from nagaoka.sector import (
    HoleSpinConfig,
    apply_move,
    connectivity_check,
    enumerate_sector,
    find_connector,
    sector_magnetizations,
)


def brute_force_orbits(model, m):
    """Independent oracle: set-based flood fill over raw configurations."""
    basis = enumerate_sector(model, m)
    t = model.hopping
    remaining = set(basis.configs)
    orbits = []
    while remaining:
        seed = next(iter(remaining))
        stack, orbit = [seed], {seed}
        while stack:
            c = stack.pop()
            for y in range(model.sites):
                if y == c.hole or t[c.hole, y] == 0.0:
                    continue
                nxt = apply_move(c, c.hole, y)
                if nxt not in orbit:
                    orbit.add(nxt)
                    stack.append(nxt)
        remaining -= orbit
        orbits.append(orbit)
    return orbits


def test_sector_dimensions():
    assert enumerate_sector(pair2(), Fraction(1, 2)).dimension == 2
    assert enumerate_sector(complete4(), Fraction(1, 2)).dimension == 12
    assert enumerate_sector(complete4(), Fraction(3, 2)).dimension == 4


def test_m_out_of_range():
    with pytest.raises(ValueError):
        enumerate_sector(complete4(), Fraction(5, 2))
    with pytest.raises(ValueError):
        enumerate_sector(chain3(), Fraction(1, 2))   # three sites have integer sectors
    with pytest.raises(ValueError):
        enumerate_sector(pair2(), 0.3)


def test_total_configuration_count():
    for model in corpus_models().values():
        total = sum(enumerate_sector(model, m).dimension
                    for m in sector_magnetizations(model.sites))
        assert total == model.sites * 2 ** (model.sites - 1)


def test_canonical_ordering_and_index():
    basis = enumerate_sector(complete4(), Fraction(1, 2))
    keys = [(c.hole, c.up_mask) for c in basis.configs]
    assert keys == sorted(keys)
    assert all(basis.index[c] == i for i, c in enumerate(basis.configs))
    assert all(not (c.up_mask >> c.hole) & 1 for c in basis.configs)


def test_apply_move_semantics():
    c = HoleSpinConfig(hole=0, up_mask=0b010)       # hole at 0, up spin at 1
    moved = apply_move(c, 0, 1)
    assert moved == HoleSpinConfig(hole=1, up_mask=0b001)
    assert apply_move(HoleSpinConfig(hole=2, up_mask=0b001), 0, 1) is None
    with pytest.raises(ValueError):
        apply_move(c, 0, 0)


def test_apply_move_is_involution():
    for model in (complete4(), chain3()):
        for m in sector_magnetizations(model.sites):
            for c in enumerate_sector(model, m).configs:
                for y in range(model.sites):
                    if y == c.hole:
                        continue
                    back = apply_move(apply_move(c, c.hole, y), y, c.hole)
                    assert back == c


def test_connectivity_matches_brute_force():
    for name, model in corpus_models().items():
        for m in sector_magnetizations(model.sites):
            rep = connectivity_check(model, m)
            oracle = brute_force_orbits(model, m)
            assert rep.connected == (len(oracle) == 1), (name, m)
            assert sorted(rep.orbit_sizes) == sorted(len(o) for o in oracle)


def test_open_chain_middle_sector_splits():
    rep = connectivity_check(chain3(), 0)
    assert not rep.connected
    assert sorted(rep.orbit_sizes) == [3, 3]


def test_polarized_sector_connected_when_graph_connected():
    for model in corpus_models().values():
        top = sector_magnetizations(model.sites)[-1]
        assert connectivity_check(model, top).connected


def test_spin_flip_symmetry():
    for model in corpus_models().values():
        for m in sector_magnetizations(model.sites):
            a = connectivity_check(model, m)
            b = connectivity_check(model, -m)
            assert a.connected == b.connected
            assert sorted(a.orbit_sizes) == sorted(b.orbit_sizes)


def test_identity_connector():
    basis = enumerate_sector(pair2(), Fraction(1, 2))
    c = basis.configs[0]
    conn = find_connector(pair2(), Fraction(1, 2), c, c)
    assert conn.length == 0
    assert conn.apply(c) == c


def test_two_site_connector():
    basis = enumerate_sector(pair2(), Fraction(1, 2))
    a = next(c for c in basis.configs if c.hole == 0)
    b = next(c for c in basis.configs if c.hole == 1)
    conn = find_connector(pair2(), Fraction(1, 2), a, b)
    assert conn.path == (0, 1)
    assert conn.length == 1
    assert conn.apply(a) == b


def test_connector_none_across_orbits():
    basis = enumerate_sector(chain3(), 0)
    rep = connectivity_check(chain3(), 0)
    a = basis.configs[rep.orbits[0][0]]
    b = basis.configs[rep.orbits[1][0]]
    assert find_connector(chain3(), 0, a, b) is None


def test_connector_application_lands_on_target():
    model = complete4()
    basis = enumerate_sector(model, Fraction(1, 2))
    rng = np.random.default_rng(3)
    t = model.hopping
    for _ in range(25):
        a = basis.configs[rng.integers(basis.dimension)]
        b = basis.configs[rng.integers(basis.dimension)]
        conn = find_connector(model, Fraction(1, 2), a, b)
        assert conn is not None
        assert conn.apply(a) == b
        for frm, to in zip(conn.path, conn.path[1:]):
            assert t[frm, to] != 0.0
