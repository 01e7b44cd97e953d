"""Monte Carlo simulation of the prepare-and-measure protocol.

Random numbers come from numpy's PCG64 seeded through ``SeedSequence``.
Every purpose (inputs, outcome sampling, sifting, resampling) and every
block of rounds gets its own child stream, keyed by
``spawn_key=(purpose, block)``. Changing one consumer therefore never
shifts another, and blocks can be generated independently and
concatenated in order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .contextuality import (
    GRAPH,
    CorrelationTable,
    ExtendedGraph,
    Strategy,
    WitnessReport,
    born_correlations,
    evaluate_witness,
    witness_weights,
)
from .sources import SourceModel, click_probability, degrade_correlations

STREAMS = {"inputs": 0, "born": 1, "sifting": 2, "resampling": 3}
BLOCK_SIZE = 1 << 16


class Phase(IntEnum):
    VERIFICATION = 0
    KEY = 1
    DISCARDED = 2


def child_rng(seed: int, purpose: str, block: int = 0) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(STREAMS[purpose], block))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ProtocolConfig:
    rounds: int
    seed: int
    strategy: Strategy
    source: SourceModel = field(default_factory=SourceModel)
    verification_fraction: float = 0.5

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")
        if not 0.0 < self.verification_fraction < 1.0:
            raise ValueError("verification_fraction must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass
class Rounds:
    """Column arrays, one entry per round; z = -1 marks a round with no click."""

    x: np.ndarray
    y: np.ndarray
    z: np.ndarray

    def __len__(self) -> int:
        return len(self.x)

    @property
    def detected(self) -> np.ndarray:
        return self.z >= 0

    def counts(self, mask: np.ndarray | None = None) -> np.ndarray:
        """Outcome counts n[x, y, z] over the selected rounds."""
        sel = self.detected if mask is None else mask & self.detected
        n = np.zeros((9, 9, 2))
        np.add.at(n, (self.x[sel], self.y[sel], self.z[sel]), 1)
        return n


def sampling_table(strategy: Strategy, source: SourceModel) -> CorrelationTable:
    return degrade_correlations(born_correlations(strategy), source)


def _generate_block(seed: int, block: int, n: int, p0: np.ndarray, p_click: float):
    rng = child_rng(seed, "inputs", block)
    x = rng.integers(0, 9, size=n)
    y = rng.integers(1, 9, size=n)
    rng = child_rng(seed, "born", block)
    clicked = rng.random(n) < p_click
    z = (rng.random(n) >= p0[x, y]).astype(np.int8)
    z[~clicked] = -1
    return x.astype(np.int8), y.astype(np.int8), z


def run_rounds(config: ProtocolConfig, table: CorrelationTable | None = None) -> Rounds:
    """Draw uniform inputs and sample outcomes from the source-degraded Born rule.

    ``table`` overrides the strategy's correlations (already post-selected).
    """
    table = table if table is not None else sampling_table(config.strategy, config.source)
    p0 = np.nan_to_num(table.p0, nan=0.0)
    p_click = click_probability(config.source)
    parts = []
    for block, start in enumerate(range(0, config.rounds, BLOCK_SIZE)):
        n = min(BLOCK_SIZE, config.rounds - start)
        parts.append(_generate_block(config.seed, block, n, p0, p_click))
    x, y, z = (np.concatenate(cols) for cols in zip(*parts))
    return Rounds(x, y, z)


class EmptyKeyPoolError(RuntimeError):
    """No round ended up in the key pool."""


@dataclass
class SiftedResult:
    phase: np.ndarray
    alice_key: np.ndarray
    bob_key: np.ndarray
    witness_estimate: WitnessReport
    verification_counts: np.ndarray

    @property
    def key_rounds(self) -> int:
        return int(np.sum(self.phase == Phase.KEY))

    @property
    def empirical_Pk(self) -> float:
        detected = np.sum(self.phase != Phase.DISCARDED)
        return float(self.key_rounds / detected) if detected else 0.0

    @property
    def agreement_rate(self) -> float:
        return float(np.mean(self.alice_key == self.bob_key))

    def summary(self) -> dict:
        return {
            "rounds": int(len(self.phase)),
            "verification_rounds": int(np.sum(self.phase == Phase.VERIFICATION)),
            "key_rounds": self.key_rounds,
            "discarded_rounds": int(np.sum(self.phase == Phase.DISCARDED)),
            "empirical_Pk": self.empirical_Pk,
            "agreement_rate": self.agreement_rate,
            "witness": self.witness_estimate.to_dict(with_terms=False),
        }


def key_eligible(x: np.ndarray, y: np.ndarray, graph: ExtendedGraph = GRAPH) -> np.ndarray:
    adj = graph.adjacency()
    x = np.asarray(x, dtype=int)
    y = np.asarray(y, dtype=int)
    return (x >= 1) & ((x == y) | adj[x, y])


def sift(
    rounds: Rounds,
    graph: ExtendedGraph = GRAPH,
    verification_fraction: float = 0.5,
    seed: int = 0,
    resamples: int = 0,
) -> SiftedResult:
    """Split rounds into verification and key pools and extract the raw keys.

    Key-eligible rounds (x >= 1 and y in {x} or N(x)) go to verification
    with probability ``verification_fraction``; every other detected round
    is verification data. Alice's bit is 0 when y == x and 1 otherwise;
    Bob's bit is his outcome.
    """
    n = len(rounds)
    u = np.concatenate(
        [child_rng(seed, "sifting", b).random(min(BLOCK_SIZE, n - s)) for b, s in enumerate(range(0, n, BLOCK_SIZE))]
    ) if n else np.empty(0)
    eligible = key_eligible(rounds.x, rounds.y, graph) & rounds.detected
    phase = np.full(n, Phase.VERIFICATION, dtype=np.int8)
    phase[eligible & (u >= verification_fraction)] = Phase.KEY
    phase[~rounds.detected] = Phase.DISCARDED
    key = phase == Phase.KEY
    if not key.any():
        raise EmptyKeyPoolError("no rounds were assigned to the key pool")
    alice = (rounds.x[key] != rounds.y[key]).astype(np.uint8)
    bob = rounds.z[key].astype(np.uint8)
    counts = rounds.counts(phase == Phase.VERIFICATION)
    table = CorrelationTable.from_counts(counts)
    if resamples:
        witness = estimate_witness_errors(table, resamples, seed, graph=graph)
    else:
        witness = evaluate_witness(table, graph)
    return SiftedResult(phase, alice, bob, witness, counts)


def estimate_witness_errors(
    table: CorrelationTable,
    resamples: int = 1000,
    seed: int = 0,
    method: str = "poisson",
    graph: ExtendedGraph = GRAPH,
) -> WitnessReport:
    """Witness with Monte Carlo standard errors from resampled counts.

    Each count is redrawn from a Poisson distribution at its observed value
    (``method="multinomial"`` keeps per-setting totals fixed instead) and
    the witness is re-evaluated. Tables without counts get zero error bars.
    """
    report = evaluate_witness(table, graph)
    if table.counts is None or resamples < 2:
        report.errors = {"S1": 0.0, "S2": 0.0, "S": 0.0}
        return report
    rng = child_rng(seed, "resampling")
    counts = table.counts
    if method == "poisson":
        draws = rng.poisson(counts, size=(resamples, *counts.shape)).astype(float)
        n0, total = draws[..., 0], draws.sum(axis=-1)
    elif method == "multinomial":
        total = np.broadcast_to(counts.sum(axis=-1), (resamples, 9, 9))
        p = np.nan_to_num(table.p0, nan=0.0)
        n0 = rng.binomial(total.astype(np.int64), p).astype(float)
    else:
        raise ValueError(f"unknown resampling method {method!r}")
    with np.errstate(invalid="ignore", divide="ignore"):
        p0 = np.where(total > 0, n0 / total, table.p0)
    p0 = np.nan_to_num(p0, nan=0.0)
    w1, c1, w2 = witness_weights(graph)
    s1 = c1 + np.einsum("rxy,xy->r", p0, w1)
    s2 = np.einsum("rxy,xy->r", p0, w2)
    report.errors = {
        "S1": float(np.std(s1, ddof=1)),
        "S2": float(np.std(s2, ddof=1)),
        "S": float(np.std(s1 + s2, ddof=1)),
    }
    return report


def pack_bits_hex(bits: np.ndarray) -> str:
    return np.packbits(np.asarray(bits, dtype=np.uint8)).tobytes().hex()


def unpack_bits_hex(text: str, nbits: int) -> np.ndarray:
    return np.unpackbits(np.frombuffer(bytes.fromhex(text), dtype=np.uint8))[:nbits]
