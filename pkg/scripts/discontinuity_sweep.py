"""Sweep r across zero for the reduced two-mode squeezed vacuum and print H and H_c.

The QFIM drops to zero exactly at r = 0 where the reduced state becomes
pure, while the continuous version stays at 4.
"""

import argparse
from dataclasses import dataclass

import numpy as np

from gaussfisher import qfim as Q
from gaussfisher.family import InitialState, catalog_family, evaluate_bundle


@dataclass
class SweepConfig:
    r_max: float = 0.05
    points: int = 11
    include_zero: bool = True


def sweep(cfg: SweepConfig):
    fam = catalog_family(InitialState("two_mode_squeezed_vacuum", 2, {"r": "r", "modes": [0, 1]}), [], ["r"], keep=[0])
    rs = np.linspace(-cfg.r_max, cfg.r_max, cfg.points)
    if cfg.include_zero and not np.any(rs == 0):
        rs = np.sort(np.r_[rs, 0.0])
    for r in rs:
        b = evaluate_bundle(fam, [r], hessians=True)
        h = Q.qfim(b)
        hc = Q.cqfim(b)
        yield r, float(b.spectrum[0]), h.method, float(h.H[0, 0]), float(hc.H[0, 0])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--r-max", type=float, default=SweepConfig.r_max)
    ap.add_argument("--points", type=int, default=SweepConfig.points)
    args = ap.parse_args()
    cfg = SweepConfig(args.r_max, args.points)
    print(f"{'r':>10} {'lambda':>14} {'route':>12} {'H':>14} {'H_c':>14}")
    for r, lam, route, h, hc in sweep(cfg):
        print(f"{r:10.4f} {lam:14.10f} {route:>12} {h:14.8f} {hc:14.8f}")


if __name__ == "__main__":
    main()
