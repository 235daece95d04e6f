"""Empirical depth-1 neighbourhood laws approaching the Poisson limit.

Run: python demos/local_weak_tour.py
"""
from __future__ import annotations

import numpy as np

from graphsw import ErModel, MarkSpaces, sample_er
from graphsw.local_weak import dist_tv, empirical_u, limit_law_er


def main():
    marks = MarkSpaces(["a"], ["b"], ["t"], ["u"])
    model = ErModel(marks, {("a", "b"): 1.0}, {("t", "u"): 1.0})
    law = limit_law_er(model)
    for n in (100, 1000, 10_000):
        tvs = [dist_tv(empirical_u(sample_er(model, n, s), 1), law) for s in range(10)]
        print(f"n={n:>6}: mean TV to the limit = {np.mean(tvs):.4f}")
    top = sorted(law.probs.items(), key=lambda kv: -kv[1])[:4]
    print("\nmost likely limit classes:")
    for c, p in top:
        print(f"  {p:.4f}  {c.describe()}")


if __name__ == "__main__":
    main()
