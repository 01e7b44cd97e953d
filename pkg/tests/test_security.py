import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctxqkd import contextuality as ctx
from ctxqkd import linalg3 as la
from ctxqkd import security as sec
from conftest import random_density

SQRT5 = np.sqrt(5.0)


def H(p):
    return -p * np.log2(p) - (1 - p) * np.log2(1 - p)


# -- information -------------------------------------------------------------


@given(st.floats(0, 1), st.floats(0, 1))
def test_product_joint_has_zero_information(a, b):
    j = np.outer([a, 1 - a], [b, 1 - b])
    assert sec.mutual_information(j) == pytest.approx(0.0, abs=1e-12)


@given(st.lists(st.floats(0, 1), min_size=4, max_size=4).filter(lambda v: sum(v) > 1e-3))
def test_information_bounds_and_relabeling(v):
    j = np.array(v).reshape(2, 2) / sum(v)
    i = sec.mutual_information(j)
    assert -1e-12 <= i <= 1 + 1e-12
    assert sec.mutual_information(j[::-1]) == pytest.approx(i, abs=1e-12)
    assert sec.mutual_information(j[:, ::-1]) == pytest.approx(i, abs=1e-12)
    assert sec.mutual_information(j.T) == pytest.approx(i, abs=1e-12)


def test_information_reference_values():
    f0 = 8 / 30
    assert sec.mutual_information([[f0, 0], [0, 1 - f0]]) == pytest.approx(H(f0), abs=1e-15)
    assert H(f0) == pytest.approx(0.8366407, abs=1e-7)
    eve = [[0.54 * f0, 0], [0.46 * f0, 22 / 30]]
    assert sec.mutual_information(eve) == pytest.approx(0.3292, abs=1e-4)
    assert np.allclose(sec.eve_joint(0.54), eve)


def test_joint_validation():
    with pytest.raises(ValueError):
        sec.as_joint([[0.5, 0.5], [0.5, 0.5]])
    with pytest.raises(ValueError):
        sec.as_joint([1, 0, 0])


# -- channel -----------------------------------------------------------------


def test_clone_unitary():
    u = sec.clone_unitary()
    assert la.is_unitary(u)
    for i in range(3):
        out = u @ np.kron(la.basis(i), la.basis(0))
        assert np.allclose(out, np.kron(la.basis(i), la.basis(i)))


def test_channel_equivalence_1000_states(rng):
    for _ in range(1000):
        rho = random_density(rng)
        q = rng.random()
        a = sec.eve_channel(rho, q, "analytic")
        b = sec.eve_channel(rho, q, "unitary")
        assert np.max(np.abs(a - b)) < 1e-12


def test_channel_examples(rng):
    psi = (la.basis(0) + la.basis(1)) / np.sqrt(2)
    assert np.allclose(sec.eve_channel(la.projector(psi), 1.0), np.diag([0.5, 0.5, 0]))
    d = np.diag([0.2, 0.3, 0.5])
    assert np.allclose(sec.eve_channel(d, 0.7), d)
    rho = random_density(rng)
    assert np.allclose(sec.eve_channel(rho, 0.0), rho)
    with pytest.raises(ValueError):
        sec.eve_channel(rho, 1.2)


# -- colourings --------------------------------------------------------------


def test_coloring_count_matches_exhaustive_filter():
    brute = [c for c in itertools.product(range(3), repeat=8)
             if all(c[a - 1] != c[b - 1] for a, b in ctx.GRAPH.edges)]
    found = sec.enumerate_colorings()
    assert len(found) == len(brute) == 30
    assert {tuple(c[v] for v in range(1, 9)) for c in found} == set(brute)
    assert len(sec.coloring_classes()) == 5


def test_sm_coloring():
    assert ctx.GRAPH.is_proper_coloring(sec.SM_COLORING)
    bad = {**sec.SM_COLORING, 2: 0}
    assert not ctx.GRAPH.is_proper_coloring(bad)
    with pytest.raises(ValueError):
        sec.AttackModel(0.5, bad)


def test_attacked_branch_guess_is_perfect():
    for c in sec.enumerate_colorings():
        model = sec.AttackModel(1.0, c)
        states = {0: np.eye(3) / 3, **model.attacked_states()}
        strat = ctx.Strategy(states, {y: np.eye(3) / 2 for y in ctx.MEASUREMENTS})
        assert sec.eve_guessing_score(strat, c) == pytest.approx(30.0, abs=1e-12)


# -- key rates ---------------------------------------------------------------


def test_ideal_key_rate():
    rep = sec.evaluate_attack(ctx.ideal_strategy(), sec.AttackModel(0.0))
    assert rep.I_AB == pytest.approx(0.8366, abs=1e-4)
    assert rep.I_AE == 0.0
    assert rep.overall == pytest.approx(0.174, abs=1e-3)
    assert rep.overall == pytest.approx(30 / 144 * rep.r, abs=1e-12)


def test_full_attack_gives_no_key():
    rep = sec.evaluate_attack(ctx.ideal_strategy(), sec.AttackModel(1.0))
    assert rep.r <= 1e-12


def test_transcribed_strategy():
    plain = sec.sm_attack_strategy(+1)
    best = sec.best_sm_attack_strategy(0.54)
    rep = sec.evaluate_attack(best, sec.AttackModel(0.54))
    assert rep.S_achieved == pytest.approx(32.070, abs=5e-3)
    assert rep.witness.S1 == pytest.approx(29.9184, abs=1e-4)
    assert rep.witness.S2 == pytest.approx(2.1513, abs=1e-4)
    assert rep.I_AB == pytest.approx(0.8109, abs=1e-3)
    assert rep.I_AE == pytest.approx(0.3292, abs=1e-4)
    assert rep.overall == pytest.approx(0.1004, abs=1e-3)
    # as printed, the relative sign of rho_0 gives a smaller witness
    printed = sec.evaluate_attack(plain, sec.AttackModel(0.54)).S_achieved
    assert printed < rep.S_achieved - 0.2


# -- seesaw ------------------------------------------------------------------


@pytest.fixture(scope="module")
def frontier():
    grid = [1.0, 0.8, 0.54, 0.3, 0.0]
    return {p.q: p for p in sec.key_rate_vs_S(grid)}


def test_seesaw_endpoints(frontier):
    assert frontier[0.0].S_max >= 30 + SQRT5 - 1e-6
    assert frontier[1.0].S_max <= 32 + 1e-6
    assert frontier[0.54].S_max == pytest.approx(32.070, abs=1e-3)
    assert frontier[0.54].overall_rate == pytest.approx(0.1004, abs=1e-3)


def test_seesaw_monotone_in_q(frontier):
    s = [frontier[q].S_max for q in sorted(frontier)]
    assert np.all(np.diff(s) <= 1e-9)


def test_no_key_at_or_below_classical_bound(frontier):
    for p in frontier.values():
        if p.S_max <= 32 + 1e-9:
            assert p.overall_rate <= 1e-6


def test_seesaw_strategy_is_consistent():
    res = sec.seesaw_max_S(0.54, sec.SM_COLORING, restarts=5)
    rep = sec.evaluate_attack(res.strategy, sec.AttackModel(0.54, res.coloring))
    assert rep.S_achieved == pytest.approx(res.S, abs=1e-9)
    assert sec.eve_guessing_score(res.strategy, res.coloring) == pytest.approx(30.0, abs=1e-12)
    assert res.converged


def test_seesaw_all_colorings_at_least_pinned():
    pinned = sec.seesaw_max_S(0.54, sec.SM_COLORING, restarts=5)
    free = sec.seesaw_max_S(0.54, None, restarts=5)
    assert free.S >= pinned.S - 1e-9


def test_seesaw_deterministic():
    a = sec.seesaw_max_S(0.3, restarts=4, seed=9)
    b = sec.seesaw_max_S(0.3, restarts=4, seed=9)
    assert a.S == b.S
    assert np.array_equal(a.strategy.states[0], b.strategy.states[0])


def test_q_grid():
    g = sec.default_q_grid()
    assert len(g) == 101 and g[0] == 1.0 and g[-1] == 0.0
    with pytest.raises(ValueError):
        sec.key_rate_vs_S([1.5])
