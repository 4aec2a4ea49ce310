"""Command-line entry point: ``bellbounds <command> [options]``.

Exit codes: 0 success (all checks pass), 1 a check failed, 2 usage or
validation error.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import BellBoundsError, ParseError
from .qcore import parse_state, serialize_state

SIG = 12
ENVELOPE_TOL = 1e-9
B_ZERO_TOL = 1e-9
MEASURE_NAMES = ("B", "M", "N", "C", "E_R")


class UsageError(Exception):
    pass


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.{SIG}g}"


def _round(obj):
    """Round every float in a JSON-able object to 12 significant digits."""
    if isinstance(obj, dict):
        return {k: _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _round(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if not np.isfinite(v) else float(f"{v:.{SIG}g}")
    return obj


def dump_json(obj) -> str:
    return json.dumps(_round(obj), sort_keys=False)


@dataclass
class RunConfig:
    command: str
    state: str | None = None
    seed: int = 0
    count: int = 1000
    rank: int = 4
    grid: str = "0:1:21"
    shots: int = 300_000
    weights: tuple = (1 / 3, 2 / 3)
    estimator: str = "regime"
    ree_tol: float = 1e-9
    with_ree: bool = False
    workers: int = 1
    out: str | None = None
    extra: dict = field(default_factory=dict)


def parse_grid(spec: str) -> np.ndarray:
    """``"start:stop:steps"`` (inclusive endpoints) or a single number."""
    try:
        parts = [float(p) for p in spec.split(":")]
    except ValueError as exc:
        raise UsageError(f"bad grid {spec!r}") from exc
    if len(parts) == 1:
        grid = np.array(parts)
    elif len(parts) == 3 and parts[2] >= 1 and float(parts[2]).is_integer():
        grid = np.linspace(parts[0], parts[1], int(parts[2]))
    else:
        raise UsageError(f"grid must be 'start:stop:steps', got {spec!r}")
    if np.any(grid < 0) or np.any(grid > 1):
        raise UsageError(f"grid values must lie in [0, 1], got {spec!r}")
    return grid


def parse_weights(spec: str) -> tuple:
    try:
        w = tuple(float(v) for v in spec.split(","))
    except ValueError as exc:
        raise UsageError(f"bad weights {spec!r}") from exc
    if len(w) != 2:
        raise UsageError("weights must be 'wA,wB'")
    return w


def load_state(path):
    if path is None:
        raise UsageError("--state is required")
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_state(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc


def _emit(text: str, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# commands


def cmd_measure(cfg: RunConfig) -> int:
    from .measures import measure_report

    rho = load_state(cfg.state)
    rep = measure_report(rho, ree_tol=cfg.ree_tol)
    _emit(dump_json(rep.as_dict()) + "\n", cfg.out)
    return 0


def cmd_state(cfg: RunConfig) -> int:
    """Write a state file for a named family member."""
    from . import families
    from .qcore import singlet

    fam, params = cfg.extra["family"], cfg.extra["params"]
    makers = {
        "singlet": lambda: singlet(),
        "werner": lambda p: families.werner(p),
        "amplitude-damped": lambda a, p: families.amplitude_damped(a, p),
        "horodecki": lambda p: families.horodecki_state(p),
        "bell-diagonal": lambda *l: families.bell_diagonal(l),
        "rho-min": lambda b: families.rho_min(b),
        "rho-max": lambda b, b0=1.0: families.rho_max(b, b0),
    }
    try:
        rho = makers[fam](*params)
    except TypeError as exc:
        raise UsageError(f"wrong number of parameters for {fam}") from exc
    _emit(serialize_state(rho) + "\n", cfg.out)
    return 0


def cmd_bounds(cfg: RunConfig) -> int:
    from .extremal import bound_curves

    grid = parse_grid(cfg.grid)
    bc = bound_curves(grid, with_er_max=True, ree_tol=cfg.ree_tol)
    rows = zip(bc.B, bc.n_max, bc.c_max, bc.n_min, bc.c_min, bc.er_min, bc.er_max)
    _emit(_csv(["B", "N_max", "C_max", "N_min", "C_min", "ERmin", "ERmax"], rows), cfg.out)
    return 0


def _scatter_block(args):
    """Measures of samples ``start .. start + count - 1`` (run in a worker)."""
    from .families import RandomStateSpec, random_state_array
    from .measures import concurrence, horodecki_m, negativity

    rank, seed, start, count = args
    r = random_state_array(RandomStateSpec(rank=rank, seed=seed, count=count), start)
    m = np.asarray(horodecki_m(r))
    return np.column_stack([np.sqrt(np.maximum(0.0, m - 1)), m, negativity(r), concurrence(r)])


def _boundary_states():
    """Non-violating states on the edges of the concurrence-negativity region."""
    from .extremal import ALPHA_MINUS, ALPHA_PLUS, N4, C_PLATEAU, plateau_state
    from .families import bell_diagonal, horodecki_state

    out = []
    for p in np.linspace(0.0, C_PLATEAU, 41):
        out.append(("horodecki", horodecki_state(p).mat))
    for a in np.linspace(ALPHA_MINUS, 0.5, 21):
        out.append(("plateau", plateau_state(a).mat))
    for n in np.linspace(0.0, N4, 21):
        a = (1 - n) / 6
        out.append(("bell-diagonal", bell_diagonal((a, a, a, (1 + n) / 2)).mat))
    return out


def envelope_violations(B, N, C, b_zero=False):
    """Indices of rows outside the analytic envelopes."""
    from .extremal import N2, c_max, c_of_n_upper_b0, n_max

    bad = []
    for i, (b, n, c) in enumerate(zip(B, N, C)):
        ok = b - ENVELOPE_TOL <= n <= n_max(min(b, 1.0)) + ENVELOPE_TOL
        ok &= b - ENVELOPE_TOL <= c <= c_max(min(b, 1.0)) + ENVELOPE_TOL
        if b_zero:
            ok &= n <= N2 + ENVELOPE_TOL and c >= n - ENVELOPE_TOL
            ok &= n > N2 or c <= c_of_n_upper_b0(min(n, N2)) + ENVELOPE_TOL
        if not ok:
            bad.append(i)
    return bad


def scatter_table(count, rank, seed, workers=1, block=4096):
    """``(count, 4)`` array of (B, M, N, C), identical for any worker count."""
    jobs = [(rank, seed, s, min(block, count - s)) for s in range(0, count, block)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            parts = list(ex.map(_scatter_block, jobs))
    else:
        parts = [_scatter_block(j) for j in jobs]
    return np.vstack(parts) if parts else np.empty((0, 4))


def cmd_scatter(cfg: RunConfig) -> int:
    from .families import RandomStateSpec, random_state_array
    from .ree import ree

    if cfg.count < 1:
        raise UsageError("--count must be >= 1")
    RandomStateSpec(rank=cfg.rank, seed=cfg.seed, count=cfg.count)
    cols = cfg.extra.get("measures", ["B", "N"])
    for c in cols:
        if c not in MEASURE_NAMES:
            raise UsageError(f"unknown measure {c!r}; choose from {', '.join(MEASURE_NAMES)}")
    if "E_R" in cols and not cfg.with_ree:
        raise UsageError("E_R needs --with-ree")
    b_zero = cfg.extra.get("b_zero", False)

    tab = scatter_table(cfg.count, cfg.rank, cfg.seed, cfg.workers)
    idx = np.arange(cfg.count)
    source = ["random"] * cfg.count
    states = None
    if b_zero:
        keep = tab[:, 0] < B_ZERO_TOL
        idx, tab = idx[keep], tab[keep]
        source = ["random"] * len(idx)
        if cfg.extra.get("boundary", True):
            from .measures import concurrence, horodecki_m, negativity

            extra = _boundary_states()
            mats = np.array([m for _, m in extra])
            m = np.asarray(horodecki_m(mats))
            etab = np.column_stack([np.sqrt(np.maximum(0, m - 1)), m, negativity(mats), concurrence(mats)])
            tab = np.vstack([tab, etab])
            idx = np.concatenate([idx, -1 - np.arange(len(extra))])
            source += [s for s, _ in extra]
            states = extra

    data = {"B": tab[:, 0], "M": tab[:, 1], "N": tab[:, 2], "C": tab[:, 3]}
    er_info = ""
    if cfg.with_ree:
        cap = min(cfg.extra.get("ree_cap", 1000), len(idx))
        er = np.full(len(idx), np.nan)
        unconverged = 0
        from .extremal import lower_bounds

        for k in range(cap):
            if idx[k] >= 0:
                rho = random_state_array(RandomStateSpec(cfg.rank, cfg.seed, 1), int(idx[k]))[0]
            else:
                rho = states[-1 - int(idx[k])][1]
            res = ree(rho, tol=cfg.ree_tol)
            er[k] = res.value
            unconverged += not res.converged
        data["E_R"] = er
        er_min = np.array([lower_bounds(min(b, 1.0))[2] for b in data["B"][:cap]])
        er_bad = int(np.sum(er[:cap] < er_min - 1e-6))
        er_info = f", E_R below lower bound: {er_bad}, REE unconverged: {unconverged}"
    else:
        er_bad = 0

    bad = envelope_violations(data["B"], data["N"], data["C"], b_zero)
    rows = ([int(i), s] + [data[c][k] for c in cols] for k, (i, s) in enumerate(zip(idx, source)))
    _emit(_csv(["index", "source"] + cols, rows), cfg.out)
    total = len(bad) + er_bad
    print(f"# rows: {len(idx)}, envelope violations: {total}{er_info}", file=sys.stderr)
    return 0 if total == 0 else 1


def _check_kkt(cfg):
    from .errors import UndefinedGradient
    from .extremal import kkt_check
    from .families import AmplitudeDampedParams, rho_max_params

    if cfg.extra.get("alpha") is not None:
        if cfg.extra.get("p") is None:
            raise UsageError("--alpha needs --p")
        cases = [("params", AmplitudeDampedParams(cfg.extra["alpha"], cfg.extra["p"]))]
    else:
        cases = [(f"rho_max(B={fmt(b)})", rho_max_params(b)) for b in parse_grid(cfg.grid)]
    out = []
    for label, q in cases:
        try:
            d = kkt_check(q).as_dict()
        except UndefinedGradient as exc:
            d = {"pass": None, "skipped": str(exc)}
        d.update(label=label, alpha=q.alpha, p=q.p)
        out.append(d)
    ran = [d for d in out if d["pass"] is not None]
    return {"check": "kkt", "results": out}, bool(ran) and all(d["pass"] for d in ran)


def _check_vw(cfg):
    from .extremal import vw_check

    out = []
    for b in parse_grid(cfg.grid):
        d = vw_check(b).as_dict()
        d["pass"] = bool(d["saturated"] and d["cond1"] and abs(d["a_plus"] - 1) <= 1e-12)
        out.append(d)
    return {"check": "vw", "results": out}, all(d["pass"] for d in out)


def _check_landmarks(cfg):
    from .extremal import mixture_rho_q, region_landmarks
    from .measures import concurrence, negativity

    out = []
    for lm in region_landmarks().values():
        d = lm.as_dict()
        d["pass"] = bool(
            abs(lm.N - lm.N_expected) <= 1e-6 and abs(lm.C - lm.C_expected) <= 1e-6 and lm.B <= B_ZERO_TOL
        )
        out.append(d)
    rq = mixture_rho_q(0.9893)
    mix = {"q": 0.9893, "N": negativity(rq), "C": concurrence(rq)}
    region = {"lower_boundary_N4_to_N2": "empirically open"}
    return {"check": "landmarks", "results": out, "mixture": mix, "region": region}, all(d["pass"] for d in out)


def _check_ordering(cfg):
    from .extremal import ordering_counterexamples

    out = [p.as_dict() for p in ordering_counterexamples()]
    return {"check": "ordering", "results": out}, all(d["holds"] for d in out)


CHECKS = {"kkt": _check_kkt, "vw": _check_vw, "landmarks": _check_landmarks, "ordering": _check_ordering}


def cmd_check(cfg: RunConfig) -> int:
    report, ok = CHECKS[cfg.extra["what"]](cfg)
    report["pass"] = ok
    _emit(dump_json(report) + "\n", cfg.out)
    return 0 if ok else 1


def cmd_simulate(cfg: RunConfig) -> int:
    from .twocopy import b_from_ttt, estimate_ttt, simulate

    rho = load_state(cfg.state)
    if cfg.shots < 1:
        raise UsageError("--shots must be >= 1")
    streams = simulate(rho, cfg.shots, cfg.weights, cfg.seed)
    est = estimate_ttt(streams, cfg.estimator)
    b = b_from_ttt(est, seed=cfg.seed)
    rep = json.loads(est.to_json())
    rep.update(M=b.M, B=b.B, M_stderr=b.M_stderr, B_stderr=b.B_stderr, out_of_range=b.out_of_range)
    _emit(dump_json(rep) + "\n", cfg.out)
    if cfg.extra.get("shots_csv"):
        with open(cfg.extra["shots_csv"], "w", encoding="utf-8", newline="") as fh:
            offset = 0
            for i, st in enumerate(streams):
                text = st.to_csv(offset)
                fh.write(text if i == 0 else text.split("\n", 1)[1])
                offset += len(st)
    return 0


COMMANDS = {
    "measure": cmd_measure,
    "state": cmd_state,
    "bounds": cmd_bounds,
    "scatter": cmd_scatter,
    "check": cmd_check,
    "simulate": cmd_simulate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="bellbounds", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *names):
        if "state" in names:
            p.add_argument("--state", help="JSON state file")
        if "seed" in names:
            p.add_argument("--seed", type=int, default=0)
        if "grid" in names:
            p.add_argument("--grid", default="0:1:21", help="start:stop:steps over B")
        if "ree" in names:
            p.add_argument("--ree-tol", type=float, default=1e-9)
        p.add_argument("--out", help="output path (default stdout)")

    p = sub.add_parser("measure", help="M, B, N, C and E_R of a state")
    common(p, "state", "ree")

    p = sub.add_parser("state", help="write a state file for a family member")
    p.add_argument("family", choices=["singlet", "werner", "amplitude-damped", "horodecki", "bell-diagonal", "rho-min", "rho-max"])
    p.add_argument("params", nargs="*", type=float)
    common(p)

    p = sub.add_parser("bounds", help="bound curves on a B grid (CSV)")
    common(p, "grid", "ree")

    p = sub.add_parser("scatter", help="Monte Carlo measures of random states (CSV)")
    common(p, "seed", "ree")
    p.add_argument("--count", type=int, default=1000)
    p.add_argument("--rank", type=int, default=4)
    p.add_argument("--measures", default="B,N", help="comma-separated columns from B,M,N,C,E_R")
    p.add_argument("--b-zero", action="store_true", help=f"keep only states with B < {B_ZERO_TOL}")
    p.add_argument("--no-boundary", action="store_true", help="with --b-zero, skip the boundary families")
    p.add_argument("--with-ree", action="store_true")
    p.add_argument("--ree-cap", type=int, default=1000, help="REE is computed for the first N rows only")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("check", help="extremality checks (JSON)")
    p.add_argument("what", choices=sorted(CHECKS))
    common(p, "grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--p", type=float)

    p = sub.add_parser("simulate", help="two-copy shot simulation (JSON)")
    common(p, "state", "seed")
    p.add_argument("--shots", type=int, default=300_000, help="shots per setting")
    p.add_argument("--weights", default="0.333333333333,0.666666666667", help="wA,wB")
    p.add_argument("--estimator", choices=["regime", "pooled"], default="regime")
    p.add_argument("--shots-csv", help="dump per-shot records to this CSV")
    return ap


def config_from_args(ns) -> RunConfig:
    cfg = RunConfig(command=ns.command, out=ns.out)
    for name in ("state", "seed", "count", "rank", "grid", "shots", "estimator", "ree_tol", "with_ree", "workers"):
        if hasattr(ns, name):
            setattr(cfg, name, getattr(ns, name))
    if hasattr(ns, "weights"):
        cfg.weights = parse_weights(ns.weights)
    if ns.command == "state":
        cfg.extra = {"family": ns.family, "params": ns.params}
    elif ns.command == "scatter":
        cfg.extra = {
            "measures": [m.strip() for m in ns.measures.split(",") if m.strip()],
            "b_zero": ns.b_zero,
            "boundary": not ns.no_boundary,
            "ree_cap": ns.ree_cap,
        }
    elif ns.command == "check":
        cfg.extra = {"what": ns.what, "alpha": ns.alpha, "p": ns.p}
    elif ns.command == "simulate":
        cfg.extra = {"shots_csv": ns.shots_csv}
    return cfg


def main(argv=None) -> int:
    ap = build_parser()
    try:
        ns = ap.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    try:
        return COMMANDS[ns.command](config_from_args(ns))
    except (UsageError, ParseError, BellBoundsError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
