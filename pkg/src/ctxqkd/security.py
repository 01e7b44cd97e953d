"""Key rates under Eve's probabilistic cloning attack.

Eve holds a qutrit ancilla in |0> and, with probability q, applies the
controlled shift U|i>|j> = |i>|j+i mod 3>, which copies the computational
basis label onto the ancilla. Bob's reduced state is then dephased:

    rho -> q * diag(rho) + (1 - q) * rho

Eve's guess of the key bit is perfect when the attacked preparations are
basis states coloured so that neighbours differ, and she guesses 1
otherwise.
"""

from __future__ import annotations

import itertools
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import partial
from typing import Mapping, Sequence

import numpy as np

from . import linalg3 as la
from .config import TOL
from .contextuality import (
    CYCLE,
    GRAPH,
    MEASUREMENTS,
    PREPARATIONS,
    CorrelationTable,
    ExtendedGraph,
    Strategy,
    WitnessReport,
    evaluate_witness,
)

KEY_FRACTION = 30 / 144

# Colouring carried by the published attack strategy: 1,3,7 -> |0>, 2,4,8 -> |1>, 5,6 -> |2>.
SM_COLORING = {1: 0, 2: 1, 3: 0, 4: 1, 5: 2, 6: 2, 7: 0, 8: 1}


# --------------------------------------------------------------------------
# Information measures


def as_joint(j) -> np.ndarray:
    j = np.asarray(j, dtype=float)
    if j.shape != (2, 2):
        raise ValueError(f"joint distribution must be 2x2, got {j.shape}")
    if np.any(j < -TOL.probability) or abs(j.sum() - 1.0) > TOL.probability:
        raise ValueError(f"not a probability distribution: {j.tolist()}")
    return np.clip(j, 0.0, None)


def binary_entropy(p: float) -> float:
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return float(-p * np.log2(p) - (1 - p) * np.log2(1 - p))


def mutual_information(j) -> float:
    """Shannon mutual information (bits) of a 2x2 joint distribution; 0 log 0 = 0."""
    j = as_joint(j)
    pa = j.sum(axis=1, keepdims=True)
    pb = j.sum(axis=0, keepdims=True)
    nz = j > 0
    # Logs taken separately: pa * pb can underflow for tiny entries.
    log_a, log_b = np.broadcast_arrays(np.log2(np.where(pa > 0, pa, 1.0)), np.log2(np.where(pb > 0, pb, 1.0)))
    return float(np.sum(j[nz] * (np.log2(j[nz]) - log_a[nz] - log_b[nz])))


# --------------------------------------------------------------------------
# Eve's channel


def dephase(rho: np.ndarray) -> np.ndarray:
    """Zero the off-diagonal entries (works on stacks of matrices)."""
    return np.asarray(rho) * np.eye(3)


def clone_unitary() -> np.ndarray:
    """Controlled shift on Bob (x) Eve: |i>|j> -> |i>|j + i mod 3>."""
    u = np.zeros((9, 9), dtype=complex)
    for i, j in itertools.product(range(3), repeat=2):
        u[3 * i + (j + i) % 3, 3 * i + j] = 1.0
    return u


_U = clone_unitary()
_ANCILLA = la.projector(la.basis(0))


def cloned_bob_state(rho: np.ndarray) -> np.ndarray:
    """Bob's marginal of U (rho (x) |0><0|) U^dagger."""
    return la.partial_trace_second(_U @ la.kron(rho, _ANCILLA) @ la.dagger(_U))


def eve_channel(rho: np.ndarray, q: float, method: str = "analytic") -> np.ndarray:
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"attack probability must lie in [0, 1], got {q}")
    rho = la.check_density(rho, max(TOL.psd, 1e-9))
    attacked = dephase(rho) if method == "analytic" else cloned_bob_state(rho)
    return q * attacked + (1.0 - q) * rho


def eve_guessing_score(strategy: Strategy, coloring: Mapping[int, int], graph: ExtendedGraph = GRAPH) -> float:
    """Eve's summed success at guessing f(x, y) on the attacked branch (30 = perfect).

    Eve measures her ancilla with E_{0|y} = |color(y)><color(y)|.
    """
    nb = graph.neighbors
    total = 0.0
    for x in graph.vertices:
        joint = _U @ la.kron(strategy.states[x], _ANCILLA) @ la.dagger(_U)
        for y in [x, *sorted(nb[x])]:
            e0 = la.kron(np.eye(3), la.projector(la.basis(coloring[y])))
            p0 = float(np.real(np.trace(joint @ e0)))
            total += p0 if y == x else 1.0 - p0
    return total


# --------------------------------------------------------------------------
# Colourings


def enumerate_colorings(graph: ExtendedGraph = GRAPH, colors: int = 3) -> list[dict[int, int]]:
    """All proper colourings, by backtracking in vertex order."""
    nb = graph.neighbors
    order = list(graph.vertices)
    out: list[dict[int, int]] = []
    current: dict[int, int] = {}

    def extend(i: int) -> None:
        if i == len(order):
            out.append(dict(current))
            return
        v = order[i]
        for c in range(colors):
            if all(current.get(u) != c for u in nb[v]):
                current[v] = c
                extend(i + 1)
                del current[v]

    extend(0)
    return out


def canonical_coloring(coloring: Mapping[int, int]) -> tuple[int, ...]:
    """Relabel colours by first appearance; equal results differ only by a basis permutation."""
    relabel: dict[int, int] = {}
    out = []
    for v in sorted(coloring):
        relabel.setdefault(coloring[v], len(relabel))
        out.append(relabel[coloring[v]])
    return tuple(out)


def coloring_classes(graph: ExtendedGraph = GRAPH) -> list[dict[int, int]]:
    """One representative per colour-permutation class, in a fixed order."""
    reps = sorted({canonical_coloring(c) for c in enumerate_colorings(graph)})
    return [dict(zip(graph.vertices, r)) for r in reps]


@dataclass(frozen=True)
class AttackModel:
    q: float
    coloring: Mapping[int, int] = field(default_factory=lambda: dict(SM_COLORING))
    graph: ExtendedGraph = GRAPH

    def __post_init__(self):
        if not 0.0 <= self.q <= 1.0:
            raise ValueError(f"attack probability must lie in [0, 1], got {self.q}")
        if set(self.coloring) != set(self.graph.vertices) or not self.graph.is_proper_coloring(self.coloring):
            raise ValueError(f"not a proper colouring: {dict(self.coloring)}")

    def eve_effect(self, y: int) -> np.ndarray:
        return la.projector(la.basis(self.coloring[y]))

    def attacked_states(self) -> dict[int, np.ndarray]:
        return {x: la.projector(la.basis(c)) for x, c in self.coloring.items()}


# --------------------------------------------------------------------------
# Bob's statistics under the attack


def bob_table(strategy: Strategy, q: float) -> CorrelationTable:
    p0 = np.full((9, 9), np.nan)
    for x in PREPARATIONS:
        rho = q * dephase(strategy.states[x]) + (1 - q) * strategy.states[x]
        for y in MEASUREMENTS:
            p0[x, y] = la.expectation(rho, strategy.effects[y])
    return CorrelationTable(p0)


@dataclass
class KeyRateReport:
    q: float
    I_AB: float
    I_AE: float
    witness: WitnessReport
    joint_AB: np.ndarray
    joint_AE: np.ndarray

    @property
    def r(self) -> float:
        return self.I_AB - self.I_AE

    @property
    def overall(self) -> float:
        return KEY_FRACTION * self.r

    @property
    def S_achieved(self) -> float:
        return self.witness.S

    def to_dict(self) -> dict:
        return {
            "q": self.q,
            "S": self.S_achieved,
            "S1": self.witness.S1,
            "S2": self.witness.S2,
            "I_AB": self.I_AB,
            "I_AE": self.I_AE,
            "rate_per_key_round": self.r,
            "overall_rate": self.overall,
            "joint_AB": self.joint_AB.tolist(),
            "joint_AE": self.joint_AE.tolist(),
        }


def key_joint(table: CorrelationTable, graph: ExtendedGraph = GRAPH) -> np.ndarray:
    """Joint distribution of (Bob's outcome z, key bit f) over uniformly drawn key pairs."""
    pairs = graph.key_pairs()
    j = np.zeros((2, 2))
    for x, y in pairs:
        f = 0 if x == y else 1
        p0 = table.p0[x, y]
        j[0, f] += p0
        j[1, f] += 1.0 - p0
    return j / len(pairs)


def eve_joint(q: float, graph: ExtendedGraph = GRAPH) -> np.ndarray:
    """Joint of (Eve's guess e, key bit f): exact with probability q, else always 1."""
    pairs = graph.key_pairs()
    f0 = sum(1 for x, y in pairs if x == y) / len(pairs)
    return np.array([[q * f0, 0.0], [(1 - q) * f0, 1.0 - f0]])


def evaluate_attack(strategy: Strategy, attack: AttackModel) -> KeyRateReport:
    table = bob_table(strategy, attack.q)
    j_ab = key_joint(table, attack.graph)
    j_ae = eve_joint(attack.q, attack.graph)
    return KeyRateReport(
        q=attack.q,
        I_AB=mutual_information(j_ab),
        I_AE=mutual_information(j_ae),
        witness=evaluate_witness(table, attack.graph),
        joint_AB=j_ab,
        joint_AE=j_ae,
    )


# --------------------------------------------------------------------------
# SeeSaw


@dataclass
class SeesawResult:
    S: float
    strategy: Strategy
    coloring: dict[int, int]
    q: float
    iterations: int
    converged: bool


def _seesaw_one(
    q: float,
    coloring: Mapping[int, int],
    graph: ExtendedGraph,
    restarts: int,
    max_iter: int,
    tol: float,
    rng: np.random.Generator,
) -> SeesawResult:
    nb = graph.neighbors
    proj = {x: la.projector(la.basis(c)) for x, c in coloring.items()}
    # S = n_edge_terms + sum_y tr(A_y M_y); A_y = rho_y - sum_{x ~ y} rho_x (+ rho0 for the cycle).
    base = np.stack([proj[y] - sum(proj[x] for x in nb[y]) for y in MEASUREMENTS])
    constant = float(sum(len(nb[x]) for x in graph.vertices))
    on_cycle = np.array([y in CYCLE for y in MEASUREMENTS])

    v = rng.normal(size=(restarts, 3)) + 1j * rng.normal(size=(restarts, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    rho0 = np.einsum("ri,rj->rij", v, v.conj())

    channel = lambda a: q * dephase(a) + (1 - q) * a  # self-adjoint
    prev = np.full(restarts, -np.inf)
    converged = False
    for it in range(1, max_iter + 1):
        a = np.broadcast_to(base, (restarts, 8, 3, 3)).copy()
        a[:, on_cycle] += channel(rho0)[:, None]
        m = la.positive_eigenspace_projector(a)
        s_meas = constant + np.einsum("ryij,ryji->r", a, m).real
        b = channel(m[:, on_cycle].sum(axis=1))
        rho0 = la.top_eigenprojector(b)
        s_state = (
            constant
            + np.einsum("yij,ryji->r", base, m).real
            + np.einsum("rij,rji->r", rho0, b).real
        )
        if np.any(s_meas < prev - 1e-9) or np.any(s_state < s_meas - 1e-9):
            raise RuntimeError("seesaw objective decreased; eigen-updates are inconsistent")
        done = np.max(np.abs(s_state - prev)) < tol
        prev = s_state
        if done:
            converged = True
            break

    best = int(np.argmax(prev))
    states = {0: rho0[best]}
    states.update(proj)
    effects = {y: m[best, i] for i, y in enumerate(MEASUREMENTS)}
    strategy = Strategy(states, effects, atol=1e-8)
    return SeesawResult(float(prev[best]), strategy, dict(coloring), q, it, converged)


def seesaw_max_S(
    q: float,
    coloring: Mapping[int, int] | None = None,
    graph: ExtendedGraph = GRAPH,
    restarts: int = 20,
    max_iter: int = 500,
    tol: float = 1e-10,
    seed: int = 0,
) -> SeesawResult:
    """Largest witness Bob can see while Eve attacks with probability q.

    Preparations 1..8 are the colouring's basis states, which makes Eve's
    attacked-branch guess perfect; rho_0 and all of Bob's effects are
    optimised by alternating eigen-updates from ``restarts`` random pure
    rho_0. Without a pinned colouring, every colour-permutation class is
    tried and the best kept.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"attack probability must lie in [0, 1], got {q}")
    candidates = [dict(coloring)] if coloring is not None else coloring_classes(graph)
    for c in candidates:
        if not graph.is_proper_coloring(c):
            raise ValueError(f"not a proper colouring: {c}")
    best = None
    for i, c in enumerate(candidates):
        rng = np.random.default_rng([seed, i])
        res = _seesaw_one(q, c, graph, restarts, max_iter, tol, rng)
        if best is None or res.S > best.S:
            best = res
    return best


@dataclass(frozen=True)
class KeyRatePoint:
    q: float
    S_max: float
    I_AB: float
    I_AE: float
    rate_per_key_round: float
    overall_rate: float


def _key_rate_point(q: float, coloring, graph, seesaw_kw) -> KeyRatePoint:
    res = seesaw_max_S(q, coloring, graph, **seesaw_kw)
    rep = evaluate_attack(res.strategy, AttackModel(q, res.coloring, graph))
    return KeyRatePoint(q, res.S, rep.I_AB, rep.I_AE, rep.r, rep.overall)


def default_q_grid(step: float = 0.01) -> np.ndarray:
    n = int(round(1.0 / step))
    return np.round(np.linspace(1.0, 0.0, n + 1), 10)


def key_rate_vs_S(
    q_grid: Sequence[float] | None = None,
    coloring: Mapping[int, int] | None = SM_COLORING,
    graph: ExtendedGraph = GRAPH,
    workers: int | None = None,
    **seesaw_kw,
) -> list[KeyRatePoint]:
    """Key rate along the SeeSaw frontier, one point per attack probability.

    ``coloring=None`` maximises over all colouring classes; the default pins
    the colouring of the published attack strategy. Output order follows
    ``q_grid`` (default: 1.00 down to 0.00 in steps of 0.01).
    """
    grid = default_q_grid() if q_grid is None else np.asarray(q_grid, dtype=float)
    if np.any((grid < 0) | (grid > 1)):
        raise ValueError("q grid must lie in [0, 1]")
    workers = workers or int(os.environ.get("CTXQKD_WORKERS", "1"))
    task = partial(_key_rate_point, coloring=coloring, graph=graph, seesaw_kw=seesaw_kw)
    if workers <= 1:
        return [task(float(q)) for q in grid]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(task, [float(q) for q in grid]))


# --------------------------------------------------------------------------
# Published attack strategy (q = 0.54), transcribed with its printed rounding


def sm_attack_strategy(relative_sign: int = 1) -> Strategy:
    """The q = 0.54 attack strategy as printed, with rho_0 = |psi><psi|.

    |psi> = (|0> + s|1>)/sqrt(2). As printed (s = +1) the witness comes out
    at 31.77; s = -1 gives the reported 32.07. ``best_sm_attack_strategy``
    picks the sign.
    """
    if relative_sign not in (1, -1):
        raise ValueError("relative_sign must be +1 or -1")
    e = [la.projector(la.basis(i)) for i in range(3)]
    psi = (la.basis(0) + relative_sign * la.basis(1)) / np.sqrt(2)
    states = {0: la.projector(psi)}
    states.update({x: e[c] for x, c in SM_COLORING.items()})
    m13 = np.array([[0.9932, -0.0822, 0], [-0.0822, 0.0068, 0], [0, 0, 0]], dtype=complex)
    m24 = np.array([[0.0068, -0.0822, 0], [-0.0822, 0.9932, 0], [0, 0, 0]], dtype=complex)
    effects = {1: m13, 3: m13, 2: m24, 4: m24, 5: e[2], 6: e[2], 7: e[0], 8: e[1]}
    return Strategy(states, effects, atol=TOL.transcription)


def best_sm_attack_strategy(q: float = 0.54) -> Strategy:
    options = [sm_attack_strategy(s) for s in (1, -1)]
    return max(options, key=lambda st: evaluate_witness(bob_table(st, q)).S)
