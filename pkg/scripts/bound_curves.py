"""Upper and lower entanglement bounds against the CHSH violation B, with
the numerical REE of both extremal families checked against the curves."""
from __future__ import annotations

import argparse
import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from bellbounds.extremal import bound_curves
from bellbounds.families import rho_max, rho_min
from bellbounds.measures import concurrence, negativity
from bellbounds.ree import ree


@dataclass
class Config:
    points: int = 21
    ree_tol: float = 1e-9
    out: Path = Path("results/bound_curves.csv")


def run(cfg: Config) -> dict:
    grid = np.linspace(0, 1, cfg.points)
    bc = bound_curves(grid, with_er_max=True, ree_tol=cfg.ree_tol)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    worst = {"N_max": 0.0, "C_max": 0.0, "ER_min": 0.0}
    with open(cfg.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["B", "N_max", "C_max", "N_min", "C_min", "ER_min", "ER_max", "ER_rho_min_numeric"])
        for k, B in enumerate(grid):
            hi = rho_max(B)
            er_lo = ree(rho_min(B), tol=cfg.ree_tol).value
            worst["N_max"] = max(worst["N_max"], abs(negativity(hi) - bc.n_max[k]))
            worst["C_max"] = max(worst["C_max"], abs(concurrence(hi) - bc.c_max[k]))
            worst["ER_min"] = max(worst["ER_min"], abs(er_lo - bc.er_min[k]))
            w.writerow([f"{v:.12g}" for v in (B, bc.n_max[k], bc.c_max[k], bc.n_min[k],
                                              bc.c_min[k], bc.er_min[k], bc.er_max[k], er_lo)])
    return {k: float(v) for k, v in worst.items()}


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=Config.points)
    ap.add_argument("--ree-tol", type=float, default=Config.ree_tol)
    ap.add_argument("--out", type=Path, default=Config.out)
    print(run(Config(**vars(ap.parse_args()))))
