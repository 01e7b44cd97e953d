"""Achievable p* along S2 at S1 = 30, and at the measured (S1, S2) pair.

Each point runs an SDP SeeSaw, so this takes a few minutes.
"""

import warnings

import numpy as np

from ctxqkd import randomness as rnd

warnings.filterwarnings("ignore", message="Solution may be inaccurate")


def main():
    pairs = [(30.0, s2) for s2 in (2.0, 2.1, 2.2, float(np.sqrt(5)))] + [(29.8238, 2.2463)]
    for s1, s2 in pairs:
        rep = rnd.randomness_bounds(s1, s2)
        ideal = "-" if rep.ideal_R is None else f"{rep.ideal_R:.4f}"
        ach = "-" if rep.achievable_pstar is None else f"{rep.achievable_pstar:.4f}"
        print(f"S1 = {s1:.4f}  S2 = {s2:.4f}  ideal R = {ideal:>7}  achievable p* = {ach}")


if __name__ == "__main__":
    main()
