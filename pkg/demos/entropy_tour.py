"""BC entropies of both demo models and a walk across the rate region.

Run: python demos/entropy_tour.py
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

from graphsw import bc_entropy, load_model, rate_region_contains

HERE = Path(__file__).parent


def main():
    for name in ("er_two.cfg", "cm_two.cfg"):
        model = load_model(HERE / name)
        bc = bc_entropy(model)
        print(f"{name}: d12={bc.d12:.3f} d1={bc.d1:.3f} d2={bc.d2:.3f}")
        print(f"  sigma12={bc.sigma12:.4f} sigma1={bc.sigma1:.4f} sigma2={bc.sigma2:.4f}")
        print(f"  sigma2|1={bc.sigma2given1:.4f} sigma1|2={bc.sigma1given2:.4f}")
        for k, (a, r) in bc.thresholds().items():
            print(f"  threshold {k:5s}: alpha={a:.4f} R={r:.4f}")

    # slide R1 along the side-1 threshold line and watch the verdict flip
    bc = bc_entropy(load_model(HERE / "er_two.cfg"))
    a1, r1 = bc.thresholds()["side1"]
    a2 = bc.thresholds()["side2"][0] + 1.0
    print("\nR1 sweep at alpha1 on its threshold, alpha2 generous:")
    for dr in np.linspace(-0.5, 0.5, 5):
        v = rate_region_contains(bc, (a1, r1 + dr, a2, 0.0))
        print(f"  R1 = {r1 + dr:+.3f}: contained={v.contained} failing={v.failing}")


if __name__ == "__main__":
    main()
