"""Extended KCBS graph, qutrit strategies and the two-part dimension witness.

The witness is kept in its unnormalised sum form

    S1 = sum_x p(0|x,x) + sum_x sum_{y in N(x)} p(1|x,y)     (30 terms)
    S2 = sum_{y=1..5} p(0|0,y)                               (5 terms)

with noncontextual (classical) bound S1 + S2 <= 32. Dividing by 35 gives
the normalised value.
"""

from __future__ import annotations

import csv
import io
import itertools
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from . import linalg3 as la
from .config import TOL

PREPARATIONS = tuple(range(9))
MEASUREMENTS = tuple(range(1, 9))
CYCLE = (1, 2, 3, 4, 5)
CLASSICAL_BOUND = 32
NORMALIZATION = 35
# Detector-only labels that show up in the measured contexts but not in the witness.
AUX_LABELS = (9, 10)


@dataclass(frozen=True)
class ExtendedGraph:
    vertices: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def neighbors(self) -> dict[int, frozenset[int]]:
        nb: dict[int, set[int]] = {v: set() for v in self.vertices}
        for a, b in self.edges:
            nb[a].add(b)
            nb[b].add(a)
        return {v: frozenset(s) for v, s in nb.items()}

    def adjacent(self, a: int, b: int) -> bool:
        return (a, b) in self.edges or (b, a) in self.edges

    def adjacency(self) -> np.ndarray:
        """Boolean matrix indexed [x, y] for x, y in 0..8 (row/column 0 empty)."""
        adj = np.zeros((9, 9), dtype=bool)
        for a, b in self.edges:
            adj[a, b] = adj[b, a] = True
        return adj

    def key_pairs(self) -> list[tuple[int, int]]:
        """(x, y) pairs usable for key: y == x or y a neighbour of x."""
        nb = self.neighbors
        return [(x, x) for x in self.vertices] + [(x, y) for x in self.vertices for y in sorted(nb[x])]

    def is_proper_coloring(self, coloring: Mapping[int, int]) -> bool:
        return all(coloring[a] != coloring[b] for a, b in self.edges)


GRAPH = ExtendedGraph(
    vertices=tuple(range(1, 9)),
    edges=((1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (2, 6), (3, 6), (4, 7), (5, 7), (1, 8), (5, 8)),
)

# Measured orthogonal bases, in the detector order of the experimental tables.
CONTEXTS = ((1, 2, 9), (1, 5, 8), (3, 4, 10), (5, 4, 7), (3, 2, 6))


def check_graph(graph: ExtendedGraph = GRAPH) -> None:
    """Consistency checks tying the hard-coded edge list to the protocol numbers."""
    nb = graph.neighbors
    degree_sum = sum(len(s) for s in nb.values())
    s1_terms = len(graph.vertices) + degree_sum
    key_fraction = s1_terms / (len(PREPARATIONS) * len(MEASUREMENTS)) / 2
    cycle = {tuple(sorted((CYCLE[i], CYCLE[(i + 1) % 5]))) for i in range(5)}
    problems = []
    if len(graph.edges) != 11:
        problems.append(f"{len(graph.edges)} edges")
    if degree_sum != 22 or s1_terms != 30:
        problems.append(f"S1 has {s1_terms} terms")
    if abs(key_fraction - 30 / 144) > 1e-15:
        problems.append(f"P_k = {key_fraction}")
    if not cycle <= {tuple(sorted(e)) for e in graph.edges}:
        problems.append("vertices 1..5 do not carry the 5-cycle")
    for ctx in CONTEXTS:
        core = [v for v in ctx if v not in AUX_LABELS]
        if not all(graph.adjacent(a, b) for a, b in itertools.combinations(core, 2)):
            problems.append(f"context {ctx} is not a clique")
    if problems:
        raise AssertionError("extended graph inconsistent: " + "; ".join(problems))


check_graph()


# --------------------------------------------------------------------------
# Qutrit strategies


def _fix_phase(v: np.ndarray) -> np.ndarray:
    idx = np.flatnonzero(np.abs(v) > 1e-12)[0]
    return v * (abs(v[idx]) / v[idx])


def complete_basis(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Unit vector orthogonal to both ``u`` and ``v`` (conjugated cross product)."""
    w = np.conj(np.cross(u, v))
    n = np.linalg.norm(w)
    if n < 1e-12:
        raise la.ValidationError("vectors are parallel; completion undefined")
    return _fix_phase(w / n)


def kcbs_vectors() -> list[np.ndarray]:
    """The five KCBS unit vectors; cyclic neighbours are orthogonal.

    Each has overlap 1/sqrt(5) with |0>, so the sum of the five overlaps
    with |0> is sqrt(5).
    """
    c = np.cos(np.pi / 5)
    cos_t = np.sqrt(c / (1 + c))
    sin_t = np.sqrt(1 - cos_t**2)
    out = []
    for k in range(5):
        phi = 4 * np.pi * k / 5
        out.append(np.array([cos_t, sin_t * np.cos(phi), sin_t * np.sin(phi)], dtype=complex))
    return out


def ideal_vectors() -> dict[int, np.ndarray]:
    """Unit vectors for all vertices 1..8 plus the auxiliary labels 9 and 10."""
    v = {k + 1: vec for k, vec in enumerate(kcbs_vectors())}
    v[6] = complete_basis(v[2], v[3])
    v[7] = complete_basis(v[4], v[5])
    v[8] = complete_basis(v[1], v[5])
    v[9] = complete_basis(v[1], v[2])
    v[10] = complete_basis(v[3], v[4])
    return v


@dataclass
class Strategy:
    """Preparations rho_x (x = 0..8) and outcome-0 effects M_{0|y} (y = 1..8)."""

    states: dict[int, np.ndarray]
    effects: dict[int, np.ndarray]
    atol: float = TOL.psd

    def __post_init__(self):
        missing = [x for x in PREPARATIONS if x not in self.states] + [
            y for y in MEASUREMENTS if y not in self.effects
        ]
        if missing:
            raise la.ValidationError(f"strategy is missing labels {missing}")
        self.states = {x: la.check_density(r, self.atol, f"rho_{x}") for x, r in self.states.items()}
        self.effects = {y: la.check_effect(m, self.atol, f"M_{y}") for y, m in self.effects.items()}

    def to_dict(self) -> dict:
        enc = lambda a: {"real": np.real(a).tolist(), "imag": np.imag(a).tolist()}
        return {
            "states": {str(x): enc(r) for x, r in sorted(self.states.items())},
            "effects": {str(y): enc(m) for y, m in sorted(self.effects.items())},
        }

    @classmethod
    def from_dict(cls, data: dict, atol: float = TOL.psd) -> "Strategy":
        dec = lambda d: np.asarray(d["real"]) + 1j * np.asarray(d["imag"])
        return cls(
            states={int(k): dec(v) for k, v in data["states"].items()},
            effects={int(k): dec(v) for k, v in data["effects"].items()},
            atol=atol,
        )


def ideal_strategy() -> Strategy:
    vecs = ideal_vectors()
    states = {0: la.projector(la.basis(0))}
    states.update({x: la.projector(vecs[x]) for x in MEASUREMENTS})
    effects = {y: la.projector(vecs[y]) for y in MEASUREMENTS}
    return Strategy(states, effects)


# --------------------------------------------------------------------------
# Correlation tables


@dataclass
class CorrelationTable:
    """p(0|x,y) indexed ``p0[x, y]`` for x in 0..8 and y in 1..8 (column 0 unused).

    Missing entries are NaN. ``counts[x, y, z]`` optionally holds raw
    outcome counts for error estimation.
    """

    p0: np.ndarray
    counts: np.ndarray | None = None

    def __post_init__(self):
        p0 = np.array(self.p0, dtype=float)
        if p0.shape != (9, 9):
            raise ValueError(f"p0 must have shape (9, 9), got {p0.shape}")
        present = ~np.isnan(p0)
        bad = present & ((p0 < -TOL.probability) | (p0 > 1 + TOL.probability))
        if bad.any():
            x, y = np.argwhere(bad)[0]
            raise ValueError(f"probability p(0|{x},{y}) = {p0[x, y]} outside [0, 1]")
        p0[present] = np.clip(p0[present], 0.0, 1.0)
        self.p0 = p0
        if self.counts is not None:
            self.counts = np.asarray(self.counts, dtype=float)
            if self.counts.shape != (9, 9, 2):
                raise ValueError("counts must have shape (9, 9, 2)")

    @classmethod
    def empty(cls) -> "CorrelationTable":
        return cls(np.full((9, 9), np.nan))

    @classmethod
    def from_counts(cls, counts: np.ndarray) -> "CorrelationTable":
        counts = np.asarray(counts, dtype=float)
        total = counts.sum(axis=2)
        with np.errstate(invalid="ignore", divide="ignore"):
            p0 = np.where(total > 0, counts[..., 0] / total, np.nan)
        p0[:, 0] = np.nan
        return cls(p0, counts)

    def p(self, z: int, x: int, y: int) -> float:
        v = self.p0[x, y]
        return float(v if z == 0 else 1.0 - v)

    def has(self, x: int, y: int) -> bool:
        return not np.isnan(self.p0[x, y])


def born_correlations(strategy: Strategy) -> CorrelationTable:
    p0 = np.full((9, 9), np.nan)
    for x in PREPARATIONS:
        for y in MEASUREMENTS:
            p0[x, y] = la.expectation(strategy.states[x], strategy.effects[y])
    return CorrelationTable(p0)


# --------------------------------------------------------------------------
# Witness


@dataclass(frozen=True)
class WitnessTerm:
    part: str  # "S1" or "S2"
    x: int
    y: int
    z: int


def witness_terms(graph: ExtendedGraph = GRAPH) -> list[WitnessTerm]:
    nb = graph.neighbors
    terms = [WitnessTerm("S1", x, x, 0) for x in graph.vertices]
    terms += [WitnessTerm("S1", x, y, 1) for x in graph.vertices for y in sorted(nb[x])]
    terms += [WitnessTerm("S2", 0, y, 0) for y in CYCLE]
    return terms


def witness_weights(graph: ExtendedGraph = GRAPH) -> tuple[np.ndarray, float, np.ndarray]:
    """Linear form of the witness on p0: S1 = c1 + <W1, p0>, S2 = <W2, p0>."""
    w1 = np.zeros((9, 9))
    w2 = np.zeros((9, 9))
    c1 = 0.0
    for t in witness_terms(graph):
        target = w1 if t.part == "S1" else w2
        if t.z == 0:
            target[t.x, t.y] += 1.0
        else:
            target[t.x, t.y] -= 1.0
            c1 += 1.0
    return w1, c1, w2


class MissingEntriesError(ValueError):
    def __init__(self, missing: list[tuple[int, int]]):
        self.missing = missing
        pairs = ", ".join(f"({x},{y})" for x, y in missing)
        super().__init__(f"correlation table lacks {len(missing)} required entries: {pairs}")


@dataclass
class WitnessReport:
    S1: float
    S2: float
    terms: list[tuple[str, int, int, int, float]] = field(default_factory=list)
    errors: dict[str, float] | None = None
    classical_bound: int = CLASSICAL_BOUND

    @property
    def S(self) -> float:
        return self.S1 + self.S2

    @property
    def S_normalized(self) -> float:
        return self.S / NORMALIZATION

    @property
    def violation(self) -> bool:
        return self.S > self.classical_bound

    def to_dict(self, with_terms: bool = True) -> dict:
        out = {
            "S1": self.S1,
            "S2": self.S2,
            "S": self.S,
            "S_normalized": self.S_normalized,
            "classical_bound": self.classical_bound,
            "violation": self.violation,
        }
        if self.errors is not None:
            out["errors"] = dict(self.errors)
        if with_terms:
            out["terms"] = [
                {"part": p, "x": x, "y": y, "z": z, "value": v} for p, x, y, z, v in self.terms
            ]
        return out


def required_pairs(graph: ExtendedGraph = GRAPH) -> list[tuple[int, int]]:
    seen = []
    for t in witness_terms(graph):
        if (t.x, t.y) not in seen:
            seen.append((t.x, t.y))
    return seen


def evaluate_witness(table: CorrelationTable, graph: ExtendedGraph = GRAPH) -> WitnessReport:
    missing = [(x, y) for x, y in required_pairs(graph) if not table.has(x, y)]
    if missing:
        raise MissingEntriesError(missing)
    s1 = s2 = 0.0
    terms = []
    for t in witness_terms(graph):
        v = table.p(t.z, t.x, t.y)
        terms.append((t.part, t.x, t.y, t.z, v))
        if t.part == "S1":
            s1 += v
        else:
            s2 += v
    return WitnessReport(s1, s2, terms)


# --------------------------------------------------------------------------
# Classical bound by exhaustive enumeration
#
# A deterministic classical strategy sends a trit m for every x and assigns
# each measurement y the set of trits answered with outcome 0, encoded as a
# 3-bit mask. Given the masks, the preparations decouple: each x just picks
# its best trit.


@dataclass(frozen=True)
class ClassicalOptimum:
    total: int
    S1: int
    S2: int
    masks: tuple[int, ...]  # outcome-0 trit set for y = 1..8
    messages: tuple[int, ...]  # trit sent for x = 0..8


def _prep_scores(bits: np.ndarray, graph: ExtendedGraph) -> np.ndarray:
    """Best score per preparation; ``bits[y-1, m, k]`` says trit m gives outcome 0 at y.

    Returns an array (9, K) for K candidate assignments, plus argmax trits.
    """
    nb = graph.neighbors
    k = bits.shape[-1]
    scores = np.empty((9, 3, k), dtype=np.int16)
    scores[0] = bits[np.array(CYCLE) - 1].sum(axis=0)
    for x in graph.vertices:
        s = bits[x - 1].astype(np.int16)
        for y in nb[x]:
            s = s + (1 - bits[y - 1])
        scores[x] = s
    return scores


def classical_scores(masks: np.ndarray, graph: ExtendedGraph = GRAPH) -> tuple[np.ndarray, np.ndarray]:
    """Classical (S1, S2) for a batch of mask assignments of shape (K, 8)."""
    masks = np.asarray(masks, dtype=np.int8)
    bits = ((masks.T[:, None, :] >> np.arange(3)[None, :, None]) & 1).astype(np.int8)
    best = _prep_scores(bits, graph).max(axis=1)
    return best[1:].sum(axis=0), best[0]


def classical_optimum(
    allowed: Mapping[int, Iterable[int]] | None = None,
    graph: ExtendedGraph = GRAPH,
    chunk_prefix: int = 2,
) -> ClassicalOptimum:
    """Exhaustive maximum of the witness over deterministic classical strategies.

    ``allowed`` optionally restricts the masks available to each measurement
    (default: all 8). The outer ``chunk_prefix`` coordinates are looped over
    in Python, the rest vectorised.
    """
    choices = [tuple(allowed[y]) if allowed and y in allowed else tuple(range(8)) for y in MEASUREMENTS]
    tail = np.array(list(itertools.product(*choices[chunk_prefix:])), dtype=np.int8)
    best_total, best = -1, None
    for prefix in itertools.product(*choices[:chunk_prefix]):
        masks = np.concatenate([np.broadcast_to(np.array(prefix, dtype=np.int8), (len(tail), chunk_prefix)), tail], axis=1)
        s1, s2 = classical_scores(masks, graph)
        tot = s1 + s2
        i = int(np.argmax(tot))
        if tot[i] > best_total:
            best_total, best = int(tot[i]), (masks[i].copy(), int(s1[i]), int(s2[i]))
    m, s1, s2 = best
    bits = ((m[:, None, None] >> np.arange(3)[None, :, None]) & 1).astype(np.int8)
    msgs = _prep_scores(bits, graph)[:, :, 0].argmax(axis=1)
    return ClassicalOptimum(best_total, s1, s2, tuple(int(v) for v in m), tuple(int(v) for v in msgs))


def classical_bound_bruteforce(graph: ExtendedGraph = GRAPH) -> int:
    return classical_optimum(graph=graph).total


# --------------------------------------------------------------------------
# CSV ingestion

CONTEXT_HEADER = ["context", "prepare_x", "detector_y", "probability"]
DIRECT_HEADER = ["x", "y", "p0"]


def _data_path(name: str) -> Path:
    return Path(str(resources.files("ctxqkd") / "data" / name))


BUNDLED = {
    "sm": "sm_tables.csv",
    "ideal": "ideal_contexts.csv",
    "uniform": "uniform_table.csv",
}


def bundled_path(name: str) -> Path:
    """Path of a bundled data file, by short name (``sm``, ``ideal``, ``uniform``) or filename."""
    return _data_path(BUNDLED.get(name, name))


def _rows(text: str) -> list[list[str]]:
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    return [[c.strip() for c in row] for row in csv.reader(lines)]


def parse_context_label(label: str) -> tuple[int, ...]:
    try:
        return tuple(int(v) for v in label.replace(" ", "").split("-"))
    except ValueError:
        raise ValueError(f"malformed context label {label!r}") from None


def _edge_context(y: int, contexts: Iterable[tuple[int, ...]]) -> tuple[int, ...] | None:
    pred = CYCLE[(CYCLE.index(y) - 1) % 5]
    for ctx in contexts:
        if y in ctx and pred in ctx:
            return ctx
    return None


def ingest_context_rows(rows: list[list[str]]) -> CorrelationTable:
    """Build a table from per-context detector click probabilities.

    The click probability at detector y for preparation x is p(0|x,y).
    Entries for a pair seen in several contexts are averaged, except
    p(0|0,y) which is read from the context holding the cycle edge
    (y-1, y). Auxiliary detector labels never enter the table.
    """
    by_ctx: dict[tuple[int, ...], dict[int, dict[int, float]]] = {}
    for n, row in enumerate(rows, start=1):
        if len(row) != 4:
            raise ValueError(f"row {n}: expected 4 fields, got {len(row)}")
        try:
            ctx = parse_context_label(row[0])
            x, y, p = int(row[1]), int(row[2]), float(row[3])
        except ValueError as exc:
            raise ValueError(f"row {n}: {exc}") from None
        if len(ctx) != 3:
            raise ValueError(f"row {n}: context {row[0]!r} must name 3 detectors")
        if y not in ctx:
            raise ValueError(f"row {n}: detector {y} not in context {row[0]!r}")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"row {n}: probability {p} outside [0, 1]")
        by_ctx.setdefault(ctx, {}).setdefault(x, {})[y] = p
    for ctx, preps in by_ctx.items():
        for x, det in preps.items():
            if set(det) != set(ctx):
                raise ValueError(f"context {ctx}, x={x}: need 3 detector columns, got {sorted(det)}")

    acc: dict[tuple[int, int], list[float]] = {}
    for ctx, preps in by_ctx.items():
        for x, det in preps.items():
            if x not in PREPARATIONS:
                continue
            for y, p in det.items():
                if y in MEASUREMENTS:
                    acc.setdefault((x, y), []).append(p)
    table = CorrelationTable.empty()
    for (x, y), vals in acc.items():
        table.p0[x, y] = float(np.mean(vals))
    for y in CYCLE:
        ctx = _edge_context(y, (c for c, preps in by_ctx.items() if 0 in preps))
        if ctx is not None:
            table.p0[0, y] = by_ctx[ctx][0][y]
    return table


def ingest_direct_rows(rows: list[list[str]], header: list[str]) -> CorrelationTable:
    idx = {name: header.index(name) for name in header}
    has_counts = "n0" in idx and "n1" in idx
    table = CorrelationTable.empty()
    counts = np.zeros((9, 9, 2)) if has_counts else None
    for n, row in enumerate(rows, start=1):
        if len(row) != len(header):
            raise ValueError(f"row {n}: expected {len(header)} fields, got {len(row)}")
        try:
            x, y = int(row[idx["x"]]), int(row[idx["y"]])
            if has_counts:
                counts[x, y] = float(row[idx["n0"]]), float(row[idx["n1"]])
            if "p0" in idx and row[idx["p0"]] != "":
                p = float(row[idx["p0"]])
            else:
                p = counts[x, y, 0] / counts[x, y].sum()
        except (ValueError, IndexError, ZeroDivisionError) as exc:
            raise ValueError(f"row {n}: {exc}") from None
        if x not in PREPARATIONS or y not in MEASUREMENTS:
            raise ValueError(f"row {n}: (x, y) = ({x}, {y}) out of range")
        if not 0.0 <= p <= 1.0:
            raise ValueError(f"row {n}: probability {p} outside [0, 1]")
        table.p0[x, y] = p
    return CorrelationTable(table.p0, counts)


def read_correlation_csv(source: str | Path) -> CorrelationTable:
    """Read either the per-context schema or the direct ``x,y,p0[,n0,n1]`` schema.

    ``source`` may be a path, a bundled short name, or CSV text.
    """
    if isinstance(source, Path) or ("\n" not in str(source)):
        path = Path(source)
        if not path.exists():
            path = bundled_path(str(source))
        text = path.read_text()
    else:
        text = str(source)
    rows = _rows(text)
    if not rows:
        raise ValueError("empty correlation file")
    header = [h.lower() for h in rows[0]]
    if header == CONTEXT_HEADER:
        return ingest_context_rows(rows[1:])
    if header[:2] == ["x", "y"] and ("p0" in header or {"n0", "n1"} <= set(header)):
        return ingest_direct_rows(rows[1:], header)
    raise ValueError(f"unrecognised header {rows[0]}")


def load_sm_table() -> CorrelationTable:
    return read_correlation_csv(bundled_path("sm"))


def strategy_context_rows(strategy: Strategy, vectors: Mapping[int, np.ndarray] | None = None) -> list[list]:
    """Per-context detector probabilities a strategy would produce, in the ingestion schema.

    Detectors are rank-one projectors on ``vectors`` (default: the ideal
    vectors, which include the auxiliary labels).
    """
    vectors = ideal_vectors() if vectors is None else vectors
    rows = []
    for ctx in CONTEXTS:
        label = "-".join(str(v) for v in ctx)
        for x in [v for v in ctx if v in MEASUREMENTS] + [0]:
            for y in ctx:
                p = la.expectation(strategy.states[x], la.projector(vectors[y]))
                rows.append([label, x, y, round(p, 12)])
    return rows


def table_to_csv(table: CorrelationTable) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = DIRECT_HEADER + (["n0", "n1"] if table.counts is not None else [])
    w.writerow(header)
    for x in PREPARATIONS:
        for y in MEASUREMENTS:
            if not table.has(x, y):
                continue
            row = [x, y, repr(float(table.p0[x, y]))]
            if table.counts is not None:
                row += [int(table.counts[x, y, 0]), int(table.counts[x, y, 1])]
            w.writerow(row)
    return buf.getvalue()
