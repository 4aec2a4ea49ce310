"""KKT and Verstraete-Wolf checks along the maximal family, and the KKT
test on perturbed parameters where it should fail."""
from __future__ import annotations

import argparse
from dataclasses import dataclass

import numpy as np

from bellbounds.errors import UndefinedGradient
from bellbounds.extremal import kkt_check, vw_check
from bellbounds.families import AmplitudeDampedParams, rho_max_params


@dataclass
class Config:
    points: int = 9
    shift: float = 0.1
    tol: float = 1e-8


def run(cfg: Config) -> None:
    grid = np.linspace(0.1, 0.9, cfg.points)
    print(f"{'B':>5} {'kkt':>5} {'minEigX':>10} {'perturbed -':>12} {'perturbed +':>12} {'vw sat':>8}")
    for B in grid:
        par = rho_max_params(B)
        rep = kkt_check(par, cfg.tol)
        pert = []
        for s in (-cfg.shift, cfg.shift):
            try:
                pert.append(str(kkt_check(AmplitudeDampedParams(par.alpha + s, par.p), cfg.tol).passed))
            except UndefinedGradient:
                pert.append("undefined")
        vw = vw_check(B)
        print(f"{B:5.2f} {rep.passed!s:>5} {rep.min_eig_x:10.2e} {pert[0]:>12} {pert[1]:>12} {vw.saturated!s:>8}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--points", type=int, default=Config.points)
    ap.add_argument("--shift", type=float, default=Config.shift)
    run(Config(**vars(ap.parse_args())))
