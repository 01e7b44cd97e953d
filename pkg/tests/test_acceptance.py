"""Acceptance criteria, one test per criterion.

Each test records a PASS/FAIL line; the lines are printed in the pytest
terminal summary and also when this file is run directly
(``python3 tests/test_acceptance.py``).
"""

import hashlib
import sys
import time

import numpy as np
import pytest

from ctxqkd import contextuality as ctx
from ctxqkd import protocol as pr
from ctxqkd import randomness as rnd
from ctxqkd import security as sec
from ctxqkd import sources as src
from ctxqkd.cli import main

RESULTS: list[str] = []
SQRT5 = np.sqrt(5.0)


def record(n: int, title: str, checks: dict[str, bool], detail: str) -> None:
    ok = all(checks.values())
    failed = [k for k, v in checks.items() if not v]
    line = f"[{'PASS' if ok else 'FAIL'}] {n:2d}. {title}: {detail}"
    if failed:
        line += f" (failed: {', '.join(failed)})"
    RESULTS.append(line)
    print(line)
    assert ok, line


def test_01_classical_bound():
    t0 = time.perf_counter()
    opt = ctx.classical_optimum()
    dt = time.perf_counter() - t0
    record(1, "classical bound by exhaustive enumeration",
           {"value": opt.total == 32, "runtime": dt <= 300},
           f"S_c = {opt.total} over 8^8 assignments in {dt:.1f} s")


def test_02_ideal_strategy():
    rep = ctx.evaluate_witness(ctx.born_correlations(ctx.ideal_strategy()))
    record(2, "ideal quantum strategy",
           {"S1": abs(rep.S1 - 30) <= 1e-9, "S2": abs(rep.S2 - SQRT5) <= 1e-9,
            "S": abs(rep.S - (30 + SQRT5)) <= 1e-9},
           f"S1 = {rep.S1:.12f}, S2 = {rep.S2:.12f}, S = {rep.S:.12f}")


def test_03_measured_tables():
    rep = ctx.evaluate_witness(ctx.load_sm_table())
    record(3, "bundled measured tables",
           {"S2": abs(rep.S2 - 2.2463) <= 1e-3, "S1": abs(rep.S1 - 29.8238) <= 5e-2},
           f"S1 = {rep.S1:.4f} (vs 29.8238), S2 = {rep.S2:.4f} (vs 2.2463)")


def test_04_ideal_key_rate():
    rep = sec.evaluate_attack(ctx.ideal_strategy(), sec.AttackModel(0.0))
    t0 = time.perf_counter()
    rounds = pr.run_rounds(pr.ProtocolConfig(1_000_000, 7, ctx.ideal_strategy()))
    res = pr.sift(rounds, seed=7)
    dt = time.perf_counter() - t0
    pk = 30 / 144
    sigma = np.sqrt(pk * (1 - pk) / len(rounds))
    record(4, "ideal key rate",
           {"I_AB": abs(rep.I_AB - 0.8366) <= 1e-4, "overall": abs(rep.overall - 0.174) <= 1e-3,
            "P_k": abs(res.empirical_Pk - pk) <= 3 * sigma, "runtime": dt <= 60},
           f"I_AB = {rep.I_AB:.5f}, overall = {rep.overall:.5f}, "
           f"P_k = {res.empirical_Pk:.5f} ({(res.empirical_Pk - pk) / sigma:+.2f} sigma, {dt:.1f} s)")


def test_05_transcribed_attack():
    rep = sec.evaluate_attack(sec.best_sm_attack_strategy(0.54), sec.AttackModel(0.54))
    record(5, "transcribed q = 0.54 attack",
           {"S": abs(rep.S_achieved - 32.070) <= 5e-3, "I_AB": abs(rep.I_AB - 0.8109) <= 1e-3,
            "I_AE": abs(rep.I_AE - 0.3292) <= 1e-4, "overall": abs(rep.overall - 0.1004) <= 1e-3},
           f"S = {rep.S_achieved:.4f}, I_AB = {rep.I_AB:.4f}, I_AE = {rep.I_AE:.4f}, overall = {rep.overall:.4f}")


def test_06_seesaw_endpoints():
    grid = sec.default_q_grid(0.05)
    pts = sec.key_rate_vs_S(grid)
    s = {round(p.q, 2): p.S_max for p in pts}
    s054 = sec.seesaw_max_S(0.54, sec.SM_COLORING).S
    ordered = [p.S_max for p in pts]  # q decreasing along the grid
    record(6, "SeeSaw endpoints and monotonicity",
           {"q=0": s[0.0] >= 30 + SQRT5 - 1e-4, "q=1": s[1.0] <= 32 + 1e-6, "q=0.54": s054 >= 32.069,
            "monotone": bool(np.all(np.diff(ordered) >= -1e-9))},
           f"S_max(0) = {s[0.0]:.4f}, S_max(0.54) = {s054:.4f}, S_max(1) = {s[1.0]:.6f}")


def test_07_source_sweep():
    grid = np.linspace(0.01, 1.0, 100)
    s2 = [p.S2 for p in src.sweep_mu(ctx.load_sm_table(), grid)]
    s2_ideal = [p.S2 for p in src.sweep_mu(ctx.born_correlations(ctx.ideal_strategy()), grid)]
    mu = src.mu_crossing(ctx.load_sm_table(), 2.1762)
    record(7, "coherent-source sweep",
           {"decreasing": bool(np.all(np.diff(s2) < 0) and np.all(np.diff(s2_ideal) < 0)),
            "crossing": 0.10 <= mu <= 0.17},
           f"S2 strictly decreasing; S2 = 2.1762 crossed at mu = {mu:.4f}")


def test_08_g2():
    coh = max(abs(src.g2_of_model(src.SourceModel.coherent(m)) - 1) for m in (0.01, 0.129, 1.0, 5.0))
    p2 = src.two_photon_prob_for_g2(0.036)
    g2 = src.g2_of_model(src.SourceModel.single_photon(p2))
    record(8, "g2 checks",
           {"coherent": coh <= 1e-6, "p2": abs(p2 - 0.0187) <= 1e-4, "single": abs(g2 - 0.036) <= 1e-3},
           f"max |g2 - 1| (coherent) = {coh:.1e}; p2 = {p2:.5f} gives g2 = {g2:.5f}")


def test_09_channel_equivalence():
    rng = np.random.default_rng(9)
    worst = 0.0
    for _ in range(1000):
        g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        rho = g @ g.conj().T
        rho /= np.trace(rho).real
        q = rng.random()
        diff = sec.eve_channel(rho, q, "analytic") - sec.eve_channel(rho, q, "unitary")
        worst = max(worst, float(np.abs(diff).max()))
    record(9, "channel equivalence", {"1000 states": worst <= 1e-12},
           f"max deviation {worst:.1e} over 1000 random states")


def test_10_randomness():
    ideal = rnd.randomness_bounds(30.0, SQRT5, search=False)
    measured = rnd.randomness_bounds(29.8238, 2.2463, search=False)
    record(10, "randomness",
           {"ideal R": abs(ideal.ideal_R - 0.8553) <= 1e-4, "measured": not measured.certified},
           f"ideal R = {ideal.ideal_R:.6f} bits; (29.8238, 2.2463) certified = {measured.certified}")


def test_11_determinism(tmp_path):
    commands = [
        ["witness", "sm"],
        ["simulate", "--rounds", "50000", "--seed", "7"],
        ["sweep-mu", "--mu-num", "25"],
        ["attack", "--q", "0.54", "--restarts", "5"],
        ["keyrate", "--q-list", "1,0.54,0", "--restarts", "5"],
        ["randomness", "--S1", "29.8238", "--S2", "2.2463", "--no-search"],
        ["classical-bound"],
    ]
    same = {}
    for i, argv in enumerate(commands):
        hashes = []
        for rep in ("a", "b"):
            out = tmp_path / f"{i}{rep}"
            assert main(argv + ["--out", str(out), "--timestamp", "2000-01-01T00:00:00+00:00"]) == 0
            hashes.append({p.name: hashlib.sha256(p.read_bytes()).hexdigest() for p in sorted(out.iterdir())})
        same[argv[0]] = hashes[0] == hashes[1]
    record(11, "determinism", same, f"byte-identical outputs for {len(commands)} commands")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
