"""Certified randomness from the x = 0 rounds.

Randomness is R = -log2 p*, with p* = max_{z,y} p(z|0,y). Two quantities
are reported:

* the ideal-case bound. At S1 = 30 and S2 = sqrt(5) the KCBS strategy is
  self-tested, so p* = 1 - 1/sqrt(5).
* an achievable p*. A SeeSaw search over qutrit strategies that reproduce
  (S1, S2) maximises p(z|0,y). It finds a lower bound on the true p*,
  which is useful for showing that a given pair certifies little or
  nothing.

At S1 = 30 the cycle effects are forced to be rank-one projectors on an
orthonormal representation of the 5-cycle, so S2 cannot exceed sqrt(5)
there. Pairs beyond that are reported as infeasible without searching.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np
from scipy.stats import unitary_group

from . import linalg3 as la
from .contextuality import CYCLE, GRAPH, MEASUREMENTS, ExtendedGraph, Strategy, ideal_strategy

SQRT5 = float(np.sqrt(5.0))
IDEAL_PSTAR = 1.0 - 1.0 / SQRT5
# Finite-dimensional SDP relaxation values quoted for the measured data; not
# recomputed here (needs a general moment-matrix solver).
REFERENCE_SDP_PSTAR = 0.5510
REFERENCE_SDP_R = 0.86

FEAS_TOL = 1e-6


@dataclass
class RandomnessReport:
    S1: float
    S2: float
    ideal_pstar: float | None
    feasible: bool | None
    achievable_pstar: float | None = None
    achieving: tuple[int, int] | None = None  # (z, y)
    notes: list[str] = field(default_factory=list)

    @property
    def ideal_R(self) -> float | None:
        return None if self.ideal_pstar is None else float(-np.log2(self.ideal_pstar))

    @property
    def certified(self) -> bool:
        return self.ideal_R is not None and bool(self.feasible is not False)

    def to_dict(self) -> dict:
        return {
            "S1": self.S1,
            "S2": self.S2,
            "ideal_pstar": self.ideal_pstar,
            "ideal_R": self.ideal_R,
            "certified": self.certified,
            "feasible": self.feasible,
            "achievable_pstar": self.achievable_pstar,
            "achievable_R": None if self.achievable_pstar is None else float(-np.log2(self.achievable_pstar)),
            "achieving_z_y": None if self.achieving is None else list(self.achieving),
            "reference_sdp_pstar": REFERENCE_SDP_PSTAR,
            "reference_sdp_R": REFERENCE_SDP_R,
            "notes": list(self.notes),
        }


# --------------------------------------------------------------------------
# Strategy values as plain arrays: states (9, 3, 3), effects (8, 3, 3) for y = 1..8.


def _s1(states, effects, graph):
    nb = graph.neighbors
    tr = lambda r, m: np.real(np.trace(r @ m))
    total = 0.0
    for x in graph.vertices:
        total += tr(states[x], effects[x - 1])
        total += sum(1.0 - tr(states[x], effects[y - 1]) for y in nb[x])
    return float(total)


def _s2(states, effects):
    return float(sum(np.real(np.trace(states[0] @ effects[y - 1])) for y in CYCLE))


def _target_value(states, effects, z, y):
    p0 = float(np.real(np.trace(states[0] @ effects[y - 1])))
    return p0 if z == 0 else 1.0 - p0


def _best_prep_states(states, effects, graph):
    """Maximise S1 over rho_1..8 for fixed effects (independent top eigenvectors)."""
    nb = graph.neighbors
    out = states.copy()
    for x in graph.vertices:
        op = effects[x - 1] - sum(effects[y - 1] for y in nb[x])
        out[x] = la.top_eigenprojector(op)
    return out


def _solve(problem: cp.Problem) -> bool:
    try:
        problem.solve(solver=cp.CLARABEL)
    except cp.SolverError:
        return False
    return problem.status in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)


def _effects_step(states, s1_min, s2_min, objective, graph):
    """SDP over Bob's effects for fixed states.

    ``objective`` is None (maximise S2) or (z, y) (maximise p(z|0,y)).
    """
    nb = graph.neighbors
    m = [cp.Variable((3, 3), hermitian=True) for _ in MEASUREMENTS]
    tr = lambda r, v: cp.real(cp.trace(r @ v))
    s1 = sum(tr(states[x], m[x - 1]) + sum(1 - tr(states[x], m[y - 1]) for y in nb[x]) for x in graph.vertices)
    s2 = sum(tr(states[0], m[y - 1]) for y in CYCLE)
    cons = [v >> 0 for v in m] + [np.eye(3) - v >> 0 for v in m] + [s1 >= s1_min]
    if objective is None:
        goal = s2
    else:
        z, y = objective
        cons.append(s2 >= s2_min)
        goal = tr(states[0], m[y - 1]) if z == 0 else 1 - tr(states[0], m[y - 1])
    if not _solve(cp.Problem(cp.Maximize(goal), cons)):
        return None
    out = np.stack([0.5 * (v.value + v.value.conj().T) for v in m])
    # Clip solver round-off back into the effect set.
    w, u = np.linalg.eigh(out)
    return np.einsum("yik,yk,yjk->yij", u, np.clip(w, 0.0, 1.0), u.conj())


def _rho0_step(effects, s2_min, objective):
    sum_m = sum(effects[y - 1] for y in CYCLE)
    if objective is None:
        return la.top_eigenprojector(sum_m)
    z, y = objective
    r = cp.Variable((3, 3), hermitian=True)
    p0 = cp.real(cp.trace(r @ effects[y - 1]))
    goal = p0 if z == 0 else 1 - p0
    cons = [r >> 0, cp.real(cp.trace(r)) == 1, cp.real(cp.trace(r @ sum_m)) >= s2_min]
    if not _solve(cp.Problem(cp.Maximize(goal), cons)):
        return None
    out = 0.5 * (r.value + r.value.conj().T)
    w, u = np.linalg.eigh(out)
    w = np.clip(w, 0.0, None)
    return (u * (w / w.sum())) @ u.conj().T


def _initial(rng: np.random.Generator):
    ideal = ideal_strategy()
    u = unitary_group.rvs(3, random_state=rng)
    states = np.stack([u @ ideal.states[x] @ u.conj().T for x in range(9)])
    effects = np.stack([u @ ideal.effects[y] @ u.conj().T for y in MEASUREMENTS])
    return states, effects


def achievable_pstar(
    S1: float,
    S2: float,
    targets: list[tuple[int, int]] | None = None,
    max_iter: int = 25,
    tol: float = 1e-6,
    seed: int = 0,
    graph: ExtendedGraph = GRAPH,
) -> tuple[float | None, tuple[int, int] | None, Strategy | None]:
    """Largest p(z|0,y) found over strategies with S1 >= ``S1`` and S2 >= ``S2``.

    Constraints are met within ``FEAS_TOL``; the robustness of the
    self-test is only O(sqrt(eps)), so near S1 = 30, S2 = sqrt(5) this
    slack is visible in p*. Returns ``(None, None, None)`` when no
    feasible strategy is reached.
    """
    rng = np.random.default_rng(seed)
    states, effects = _initial(rng)
    s1_min, s2_min = S1 - FEAS_TOL / 2, S2 - FEAS_TOL / 2

    # Phase 1: climb S2 while holding S1 >= target, until (S1, S2) is reproduced.
    for _ in range(max_iter):
        states = _best_prep_states(states, effects, graph)
        if _s1(states, effects, graph) < s1_min:
            new = _effects_step(states, s1_min, s2_min, None, graph)
            if new is None:
                return None, None, None
            effects = new
        states[0] = _rho0_step(effects, s2_min, None)
        before = _s2(states, effects)
        if before >= s2_min and _s1(states, effects, graph) >= s1_min:
            break
        new = _effects_step(states, s1_min, s2_min, None, graph)
        if new is None:
            return None, None, None
        effects = new
        states[0] = _rho0_step(effects, s2_min, None)
        if _s2(states, effects) - before < tol:
            break
    if not (_s2(states, effects) >= S2 - FEAS_TOL and _s1(states, effects, graph) >= S1 - FEAS_TOL):
        return None, None, None

    # Phase 2: maximise each p(z|0,y) from the feasible point.
    feasible = lambda st, ef: _s1(st, ef, graph) >= S1 - FEAS_TOL and _s2(st, ef) >= S2 - FEAS_TOL
    targets = targets or [(z, y) for y in CYCLE for z in (0, 1)]
    best = (-np.inf, None, None)
    for z, y in targets:
        st, ef = states.copy(), effects.copy()
        value = _target_value(st, ef, z, y)
        # Solver round-off can step slightly outside the feasible set, so
        # iterates are only recorded when they pass the exact check.
        kept = (value, st.copy(), ef.copy())
        for _ in range(max_iter):
            new_ef = _effects_step(st, s1_min, s2_min, (z, y), graph)
            if new_ef is None:
                break
            ef = new_ef
            st = _best_prep_states(st, ef, graph)
            r0 = _rho0_step(ef, s2_min, (z, y))
            if r0 is None:
                break
            st[0] = r0
            new_value = _target_value(st, ef, z, y)
            if feasible(st, ef) and new_value > kept[0]:
                kept = (new_value, st.copy(), ef.copy())
            done = abs(new_value - value) < tol
            value = new_value
            if done:
                break
        if kept[0] > best[0]:
            _, kst, kef = kept
            strat = Strategy({x: kst[x] for x in range(9)}, {y: kef[y - 1] for y in MEASUREMENTS}, atol=1e-6)
            best = (kept[0], (z, y), strat)
    if best[1] is None:
        return None, None, None
    return float(best[0]), best[1], best[2]


def randomness_bounds(
    S1: float,
    S2: float,
    search: bool = True,
    seed: int = 0,
    **search_kw,
) -> RandomnessReport:
    if S1 > 30 + 1e-9 or S2 > 5 + 1e-9 or S1 < 0 or S2 < 0:
        raise ValueError(f"(S1, S2) = ({S1}, {S2}) outside 0 <= S1 <= 30, 0 <= S2 <= 5")
    perfect = abs(S1 - 30.0) <= 1e-9
    report = RandomnessReport(
        S1=S1,
        S2=S2,
        ideal_pstar=IDEAL_PSTAR if perfect and S2 >= SQRT5 - 1e-9 else None,
        feasible=None,
    )
    if report.ideal_pstar is None:
        report.notes.append("ideal-case bound needs S1 = 30 and S2 = sqrt(5); no randomness certified")
    if perfect and S2 > SQRT5 + 1e-9:
        report.feasible = False
        report.notes.append("infeasible: S1 = 30 caps S2 at sqrt(5)")
        return report
    if search:
        p, target, _ = achievable_pstar(S1, S2, seed=seed, **search_kw)
        report.feasible = p is not None
        report.achievable_pstar = p
        report.achieving = target
        if p is None:
            report.notes.append("search found no strategy reproducing (S1, S2)")
    return report
