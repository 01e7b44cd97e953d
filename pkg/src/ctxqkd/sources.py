"""Photon-number statistics and their effect on the measured correlations.

Two source kinds are modelled: an (attenuated) coherent laser with Poisson
photon numbers, and a deterministic single-photon emitter with a small
residual two-photon probability. Multi-photon pulses degrade the binary
correlations under the exclusive-click convention: outcome 0 needs the
preferred detector, and only it, to click. Every photon is routed
independently with the single-photon Born probabilities, so there is no
photon-photon interference in the model.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np
from scipy import optimize, stats

from .contextuality import CorrelationTable, evaluate_witness


@dataclass(frozen=True)
class SourceModel:
    kind: str = "deterministic"  # or "coherent"
    mu: float = 1.0
    two_photon_prob: float = 0.0
    dark_count_prob: float = 0.0
    n_max: int = 30

    def __post_init__(self):
        if self.kind not in ("deterministic", "coherent"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.mu < 0:
            raise ValueError(f"mean photon number must be >= 0, got {self.mu}")
        if self.n_max < 2:
            raise ValueError(f"n_max must be >= 2, got {self.n_max}")
        for name in ("two_photon_prob", "dark_count_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def coherent(cls, mu: float, **kw) -> "SourceModel":
        return cls(kind="coherent", mu=mu, **kw)

    @classmethod
    def single_photon(cls, two_photon_prob: float = 0.0, **kw) -> "SourceModel":
        return cls(kind="deterministic", two_photon_prob=two_photon_prob, **kw)


def photon_number_pmf(model: SourceModel) -> np.ndarray:
    """P(n) for n = 0..n_max."""
    n = np.arange(model.n_max + 1)
    if model.kind == "coherent":
        p = stats.poisson.pmf(n, model.mu)
        total = p.sum()
        return p / total if total > 0 else p
    p = np.zeros(model.n_max + 1)
    p[1] = 1.0 - model.two_photon_prob
    p[2] = model.two_photon_prob
    return p


def mean_photon_number(model: SourceModel) -> float:
    p = photon_number_pmf(model)
    return float(np.dot(np.arange(len(p)), p))


def g2_of_model(model: SourceModel) -> float:
    """Zero-delay second-order correlation <n(n-1)>/<n>^2."""
    p = photon_number_pmf(model)
    n = np.arange(len(p))
    mean = np.dot(n, p)
    if mean <= 0:
        raise ValueError("g2 undefined for zero mean photon number")
    return float(np.dot(n * (n - 1), p) / mean**2)


def two_photon_prob_for_g2(g2: float) -> float:
    """Residual two-photon probability of a deterministic source with the given g2.

    Solves 2 p2 / (1 + p2)^2 = g2 on p2 in [0, 1].
    """
    if not 0.0 <= g2 <= 0.5:
        raise ValueError("a one/two-photon mixture reaches g2 in [0, 0.5] only")
    if g2 == 0:
        return 0.0
    return float(optimize.brentq(lambda p: 2 * p / (1 + p) ** 2 - g2, 0.0, 1.0, xtol=1e-15))


def click_probability(model: SourceModel) -> float:
    """Probability that at least one of the three detectors clicks in a window."""
    p = photon_number_pmf(model)
    return float(1.0 - p[0] * (1.0 - model.dark_count_prob) ** 3)


def effective_p0(q0: np.ndarray, model: SourceModel) -> np.ndarray:
    """Post-selected probability of outcome 0 given single-photon probability ``q0``."""
    q0 = np.asarray(q0, dtype=float)
    p = photon_number_pmf(model)
    d = model.dark_count_prob
    n = np.arange(1, len(p))
    signal = (np.power.outer(q0.reshape(-1), n) @ p[1:]).reshape(q0.shape)
    quiet_others = (1.0 - d) ** 2
    p_zero = (signal + p[0] * d) * quiet_others
    clicked = click_probability(model)
    if clicked <= 0:
        raise ValueError("source never produces a click; post-selection undefined")
    return p_zero / clicked


def degrade_correlations(ideal: CorrelationTable, model: SourceModel) -> CorrelationTable:
    p0 = ideal.p0.copy()
    present = ~np.isnan(p0)
    p0[present] = effective_p0(p0[present], model)
    return CorrelationTable(p0)


@dataclass(frozen=True)
class SweepPoint:
    mu: float
    S1: float
    S2: float

    @property
    def S(self) -> float:
        return self.S1 + self.S2


def sweep_mu(
    ideal: CorrelationTable,
    mu_grid: Sequence[float],
    template: SourceModel | None = None,
) -> list[SweepPoint]:
    """Witness along a grid of mean photon numbers for a coherent source."""
    grid = np.asarray(mu_grid, dtype=float)
    if np.any(grid <= 0):
        raise ValueError("mu grid must be positive")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("mu grid must be strictly increasing")
    template = template or SourceModel(kind="coherent")
    out = []
    for mu in grid:
        rep = evaluate_witness(degrade_correlations(ideal, replace(template, kind="coherent", mu=float(mu))))
        out.append(SweepPoint(float(mu), rep.S1, rep.S2))
    return out


def mu_crossing(
    ideal: CorrelationTable,
    target_S2: float,
    template: SourceModel | None = None,
    bracket: tuple[float, float] = (1e-6, 10.0),
) -> float:
    """Mean photon number at which the degraded S2 falls to ``target_S2``."""
    template = template or SourceModel(kind="coherent")

    def gap(mu):
        table = degrade_correlations(ideal, replace(template, kind="coherent", mu=mu))
        return evaluate_witness(table).S2 - target_S2

    lo, hi = bracket
    if gap(lo) < 0 or gap(hi) > 0:
        raise ValueError(f"S2 = {target_S2} is not crossed inside mu in {bracket}")
    return float(optimize.brentq(gap, lo, hi, xtol=1e-12))
