"""Sup-norm ladders of the rank-one difference kernel and how the fitted slope depends on the set-up.

Shows the two effects behind the preset choices:
  * d = 1: a narrow x-window misses the outgoing wave and steepens the fit;
  * d = 3: a width-1 Gaussian is still pre-asymptotic on t in [1, 64], a narrower one is not.

Usage: python3 scripts/decay_study.py [--quick]
"""

import argparse
import time
import warnings

import numpy as np

from finrank.analysis import BoundaryMaxWarning, axis_points, fit_decay_exponent, sup_norm_ladder
from finrank.profiles import ProfileFamily, make_gaussian_profile

LADDER = [1.0, 2.0, 4.0, 8.0, 16.0, 32.0, 64.0]


def ladder(d, width, xs, ys):
    f = ProfileFamily.single(make_gaussian_profile(d, width), 1.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundaryMaxWarning)
        sups = sup_norm_ladder(f, LADDER, axis_points(xs, d), axis_points(ys, d))
    norms = np.array([s.value for s in sups])
    rep = fit_decay_exponent(LADDER, norms, -d / 2)
    return rep, sups


def report(label, rep, sups, d):
    scaled = " ".join(f"{s.value * s.t ** (d / 2):.4g}" for s in sups)
    print(f"{label:38s} slope {rep.slope:+.4f} +- {rep.stderr:.3f}   sup*t^(d/2): {scaled}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--quick", action="store_true", help="skip the wide d = 1 window")
    quick = ap.parse_args().quick
    ys1 = np.linspace(-4, 4, 9)
    cases = [("d=1 width 1, x in [-4, 4]", 1, 1.0, np.linspace(-4, 4, 9), ys1)]
    if not quick:
        cases.append(("d=1 width 1, x in [-300, 300]", 1, 1.0, np.linspace(-300, 300, 601), ys1))
    pts3 = np.linspace(-3, 3, 13)
    cases += [
        ("d=3 width 1", 3, 1.0, pts3, pts3),
        ("d=3 width 0.5", 3, 0.5, pts3, pts3),
        ("d=3 width 0.35", 3, 0.35, pts3, pts3),
    ]
    for label, d, w, xs, ys in cases:
        start = time.perf_counter()
        rep, sups = ladder(d, w, xs, ys)
        report(label, rep, sups, d)
        print(f"{'':38s} ({time.perf_counter() - start:.1f} s)")
