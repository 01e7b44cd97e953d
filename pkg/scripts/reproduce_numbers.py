"""Print every headline number the package reproduces, with its reference value."""

import warnings

import numpy as np

from ctxqkd import contextuality as ctx
from ctxqkd import randomness as rnd
from ctxqkd import security as sec
from ctxqkd import sources as src

warnings.filterwarnings("ignore", message="Solution may be inaccurate")


def row(label, value, reference=None):
    ref = "" if reference is None else f"   (reference {reference})"
    print(f"{label:<44s} {value:>12.6f}{ref}")


def main():
    opt = ctx.classical_optimum()
    row("classical bound", opt.total, 32)

    ideal = ctx.evaluate_witness(ctx.born_correlations(ctx.ideal_strategy()))
    row("ideal S1", ideal.S1, 30)
    row("ideal S2", ideal.S2, "sqrt(5)")

    sm = ctx.evaluate_witness(ctx.load_sm_table())
    row("measured S1 (duplicates averaged)", sm.S1, 29.8238)
    row("measured S2", sm.S2, 2.2463)
    row("measured S", sm.S, 32.0701)

    rep = sec.evaluate_attack(ctx.ideal_strategy(), sec.AttackModel(0.0))
    row("ideal I(A:B)", rep.I_AB, 0.8366)
    row("ideal overall key rate", rep.overall, 0.174)

    rep = sec.evaluate_attack(sec.best_sm_attack_strategy(0.54), sec.AttackModel(0.54))
    row("transcribed attack S", rep.S_achieved, 32.0701)
    row("transcribed attack I(A:B)", rep.I_AB, 0.8109)
    row("transcribed attack I(A:E)", rep.I_AE, 0.3292)
    row("transcribed attack overall rate", rep.overall, 0.1004)

    for q in (0.0, 0.54, 1.0):
        row(f"SeeSaw S_max at q = {q}", sec.seesaw_max_S(q, sec.SM_COLORING).S)

    row("p2 for g2 = 0.036", src.two_photon_prob_for_g2(0.036), 0.0187)
    row("mu at S2 = 2.1762 (measured base)", src.mu_crossing(ctx.load_sm_table(), 2.1762), 0.129)
    row("mu at S2 = 2.1762 (ideal base)", src.mu_crossing(ctx.born_correlations(ctx.ideal_strategy()), 2.1762))

    r = rnd.randomness_bounds(30.0, np.sqrt(5), search=False)
    row("ideal certified randomness (bits)", r.ideal_R, 0.8553)


if __name__ == "__main__":
    main()
