#!/usr/bin/env python3
"""Independent reference values for the confidence measures.

Written directly from the closed-form definitions with mpmath at 50 digits,
without sharing any code with the Rust implementation. The output is frozen
into crates/core/tests/data/reference_measures.json and checked by the test
suites.

Usage: python3 scripts/reference_measures.py > crates/core/tests/data/reference_measures.json
"""
import json

import mpmath as mp

mp.mp.dps = 50


def max_prob(p):
    v = len(p)
    return (max(p) - mp.mpf(1) / v) / (1 - mp.mpf(1) / v)


def neg_gibbs(p):
    return mp.fsum(x * mp.log(x) for x in p if x > 0)


def gibbs_lin(p):
    return 1 + neg_gibbs(p) / mp.log(len(p))


def gibbs_exp(p):
    v = len(p)
    return (v * mp.e ** neg_gibbs(p) - 1) / (v - 1)


def power_sum(p, a):
    return mp.fsum(x ** a for x in p if x > 0)


def tsallis_lin(p, a):
    v = len(p)
    return (mp.mpf(v) ** (1 - a) - power_sum(p, a)) / (mp.mpf(v) ** (1 - a) - 1)


def tsallis_exp(p, a):
    v = len(p)
    num = mp.e ** ((mp.mpf(v) ** (1 - a) - power_sum(p, a)) / (1 - a)) - 1
    den = mp.e ** ((mp.mpf(v) ** (1 - a) - 1) / (1 - a)) - 1
    return num / den


def renyi_lin(p, a):
    v = len(p)
    return 1 + mp.log(power_sum(p, a), v) / (a - 1)


def renyi_exp(p, a):
    v = len(p)
    return (v * power_sum(p, a) ** (1 / (a - 1)) - 1) / (v - 1)


CASES = [
    [mp.mpf("0.9"), mp.mpf("0.1")],
    [mp.mpf("0.4"), mp.mpf("0.3"), mp.mpf("0.2"), mp.mpf("0.1")],
    [mp.mpf("0.7"), mp.mpf("0.2"), mp.mpf("0.05"), mp.mpf("0.05"), mp.mpf("0")],
]
ALPHAS = [mp.mpf(1) / 4, mp.mpf(1) / 3, mp.mpf(1) / 2, mp.mpf(2)]


def main():
    rows = []
    for p in CASES:
        probs = [float(x) for x in p]
        rows.append({"probs": probs, "measure": "max_prob", "norm": "lin", "alpha": None,
                     "value": float(max_prob(p))})
        rows.append({"probs": probs, "measure": "gibbs", "norm": "lin", "alpha": None,
                     "value": float(gibbs_lin(p))})
        rows.append({"probs": probs, "measure": "gibbs", "norm": "exp", "alpha": None,
                     "value": float(gibbs_exp(p))})
        for a in ALPHAS:
            for name, fn in (("tsallis", tsallis_lin), ("renyi", renyi_lin)):
                rows.append({"probs": probs, "measure": name, "norm": "lin", "alpha": float(a),
                             "value": float(fn(p, a))})
            for name, fn in (("tsallis", tsallis_exp), ("renyi", renyi_exp)):
                rows.append({"probs": probs, "measure": name, "norm": "exp", "alpha": float(a),
                             "value": float(fn(p, a))})
    print(json.dumps(rows, indent=1))


if __name__ == "__main__":
    main()
