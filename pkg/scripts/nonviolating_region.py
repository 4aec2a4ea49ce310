"""Concurrence against negativity for states that do not violate CHSH:
random samples, the analytic boundary curves and the landmark states."""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bellbounds.cli import B_ZERO_TOL, scatter_table
from bellbounds.extremal import N2, c_of_n_lower_b0, c_of_n_upper_b0, mixture_rho_q, region_landmarks
from bellbounds.measures import concurrence, negativity


@dataclass
class Config:
    count: int = 50_000
    seed: int = 7
    curve_points: int = 200
    out_dir: Path = Path("results")


def run(cfg: Config) -> dict:
    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    tab = scatter_table(cfg.count, 4, cfg.seed)
    keep = tab[:, 0] < B_ZERO_TOL
    N, C = tab[keep, 2], tab[keep, 3]
    above = int(np.sum([c > c_of_n_upper_b0(min(n, N2)) + 1e-9 for n, c in zip(N, C)]))
    below = 0
    for n, c in zip(N, C):
        lo = c_of_n_lower_b0(min(n, N2))
        below += lo is not None and c < lo - 1e-9
    with open(cfg.out_dir / "region_samples.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "C"])
        w.writerows([f"{n:.12g}", f"{c:.12g}"] for n, c in zip(N, C))
    with open(cfg.out_dir / "region_curves.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["N", "C_upper", "C_lower"])
        for n in np.linspace(0, N2, cfg.curve_points):
            lo = c_of_n_lower_b0(n)
            w.writerow([f"{n:.12g}", f"{c_of_n_upper_b0(n):.12g}", "" if lo is None else f"{lo:.12g}"])
    marks = {k: (round(m.N, 6), round(m.C, 6)) for k, m in region_landmarks().items()}
    rq = mixture_rho_q(0.9893)
    marks["rho_q(0.9893)"] = (round(negativity(rq), 6), round(concurrence(rq), 6))
    return {"non_violating": int(keep.sum()), "above_upper": above, "below_lower": int(below), "landmarks": marks}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--count", type=int, default=Config.count)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--out-dir", type=Path, default=Config.out_dir)
    print(run(Config(**vars(ap.parse_args()))))
