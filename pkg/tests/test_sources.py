import numpy as np
import pytest
from hypothesis import given, strategies as st

from ctxqkd import contextuality as ctx
from ctxqkd import sources as src

Q0 = 1 / np.sqrt(5)


def closed_form_p0(q0, mu):
    """Dark-count-free post-selected p(0) for an untruncated Poisson source."""
    return (np.exp(mu * (q0 - 1)) - np.exp(-mu)) / (1 - np.exp(-mu))


def ideal_table():
    return ctx.born_correlations(ctx.ideal_strategy())


def test_pmf_closed_forms():
    assert src.photon_number_pmf(src.SourceModel.coherent(1.0))[1] == pytest.approx(np.exp(-1), abs=1e-12)
    assert src.photon_number_pmf(src.SourceModel.coherent(1e-9))[0] == pytest.approx(1.0, abs=1e-8)
    p = src.photon_number_pmf(src.SourceModel.single_photon())
    assert p[1] == 1.0 and p.sum() == 1.0
    p = src.photon_number_pmf(src.SourceModel.single_photon(0.1))
    assert (p[1], p[2]) == pytest.approx((0.9, 0.1))


@given(st.floats(0.0, 20.0), st.integers(2, 60))
def test_pmf_normalised(mu, n_max):
    p = src.photon_number_pmf(src.SourceModel.coherent(mu, n_max=n_max))
    assert p.sum() == pytest.approx(1.0, abs=1e-9)
    assert np.all(p >= 0)


@pytest.mark.parametrize("kw", [dict(kind="laser"), dict(mu=-0.1), dict(n_max=1),
                                dict(dark_count_prob=1.5), dict(two_photon_prob=-0.1)])
def test_invalid_models(kw):
    with pytest.raises(ValueError):
        src.SourceModel(**kw)


@given(st.floats(0.01, 5.0))
def test_coherent_g2_is_one(mu):
    assert src.g2_of_model(src.SourceModel.coherent(mu, n_max=40)) == pytest.approx(1.0, abs=1e-6)


def test_single_photon_g2():
    assert src.g2_of_model(src.SourceModel.single_photon()) == 0.0
    p2 = src.two_photon_prob_for_g2(0.036)
    assert p2 == pytest.approx(0.0187, abs=1e-4)
    assert 2 * p2 / (1 + p2) ** 2 == pytest.approx(0.036, abs=1e-12)
    assert src.g2_of_model(src.SourceModel.single_photon(p2)) == pytest.approx(0.036, abs=1e-12)


def test_g2_zero_mean_rejected():
    with pytest.raises(ValueError):
        src.g2_of_model(src.SourceModel.coherent(0.0))


def test_deterministic_source_leaves_table_unchanged():
    t = ideal_table()
    d = src.degrade_correlations(t, src.SourceModel.single_photon())
    assert np.allclose(d.p0, t.p0, equal_nan=True, atol=1e-15)


@pytest.mark.parametrize("mu", [0.01, 0.129, 0.5, 1.0])
def test_coherent_matches_closed_form(mu):
    got = src.effective_p0(np.array([Q0]), src.SourceModel.coherent(mu, n_max=60))[0]
    assert got == pytest.approx(closed_form_p0(Q0, mu), abs=1e-12)


def test_threshold_example_values():
    assert closed_form_p0(Q0, 0.129) == pytest.approx(0.43130, abs=1e-5)
    rep = ctx.evaluate_witness(src.degrade_correlations(ideal_table(), src.SourceModel.coherent(0.129)))
    assert rep.S2 == pytest.approx(5 * closed_form_p0(Q0, 0.129), abs=1e-9)
    assert rep.S2 == pytest.approx(2.1565, abs=1e-4)


def test_mu_one_value():
    rep = ctx.evaluate_witness(src.degrade_correlations(ideal_table(), src.SourceModel.coherent(1.0)))
    assert rep.S2 == pytest.approx(5 * closed_form_p0(Q0, 1.0), abs=1e-9)
    assert rep.S2 == pytest.approx(1.6410, abs=1e-4)


def test_dark_counts_against_simulation():
    """Route photons and dark clicks explicitly and compare with the formula."""
    model = src.SourceModel.coherent(0.3, dark_count_prob=0.05)
    rng = np.random.default_rng(5)
    n = 400_000
    q0 = 0.7
    photons = rng.poisson(0.3, size=n)
    on_pref = rng.binomial(photons, q0)
    others = photons - on_pref
    dark = rng.random((n, 3)) < 0.05
    pref_click = (on_pref > 0) | dark[:, 0]
    other_click = (others > 0) | dark[:, 1] | dark[:, 2]
    any_click = pref_click | other_click
    freq = np.mean(pref_click[any_click] & ~other_click[any_click])
    expected = src.effective_p0(np.array([q0]), model)[0]
    sigma = np.sqrt(expected * (1 - expected) / any_click.sum())
    assert abs(freq - expected) < 4 * sigma
    assert np.mean(any_click) == pytest.approx(src.click_probability(model), abs=4 * np.sqrt(0.25 / n))


@given(st.integers(0, 2**32 - 1), st.floats(0.01, 3.0))
def test_degraded_probabilities_valid_and_below_q0(seed, mu):
    q0 = np.random.default_rng(seed).random(50)
    p = src.effective_p0(q0, src.SourceModel.coherent(mu))
    assert np.all((p >= 0) & (p <= 1))
    assert np.all(p <= q0 + 1e-12)
    assert src.effective_p0(np.array([0.0, 1.0]), src.SourceModel.coherent(mu)) == pytest.approx([0.0, 1.0])


@given(st.integers(0, 2**32 - 1))
def test_sweep_monotone_on_random_tables(seed):
    p0 = np.random.default_rng(seed).random((9, 9))
    pts = src.sweep_mu(ctx.CorrelationTable(p0), np.linspace(0.05, 2.0, 12))
    s2 = np.array([p.S2 for p in pts])
    assert np.all(np.diff(s2) <= 1e-12)


def test_sweep_small_mu_limit():
    t = ideal_table()
    (pt,) = src.sweep_mu(t, [0.001])
    assert pt.S2 == pytest.approx(np.sqrt(5), abs=1e-3)


def test_sweep_strictly_decreasing_on_ideal():
    pts = src.sweep_mu(ideal_table(), np.linspace(0.01, 1.0, 100))
    assert np.all(np.diff([p.S2 for p in pts]) < 0)


@pytest.mark.parametrize("grid", [[0.0, 0.1], [0.2, 0.1], [0.1, 0.1]])
def test_sweep_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        src.sweep_mu(ideal_table(), grid)


def test_crossing():
    mu_ideal = src.mu_crossing(ideal_table(), 2.1762)
    mu_sm = src.mu_crossing(ctx.load_sm_table(), 2.1762)
    assert mu_ideal == pytest.approx(0.0970, abs=1e-3)
    assert 0.10 <= mu_sm <= 0.17
    with pytest.raises(ValueError):
        src.mu_crossing(ideal_table(), 3.0)
