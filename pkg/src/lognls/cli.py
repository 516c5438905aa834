"""Command-line front end: ground, bifurcate, minimize, evolve, stability.

Exit codes: 0 success, 1 usage/configuration error, 2 numerical failure.
Options may also be supplied through a ``key = value`` config file
(--config); explicit flags win over file entries.  All numeric output is
printed with 17 significant digits and files are written atomically.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile

import numpy as np

from . import dynamics, fields, stationary
from .dynamics import EvolutionConfig, evolve, stability_experiment
from .fields import (
    ConvergenceError,
    Field,
    Grid,
    Metric,
    Seed,
    MinimizeOptions,
    minimize_dgamma,
    report,
    sample_profile,
    stationary_residual,
)
from .stationary import (
    Branch,
    action_closed_form,
    bifurcation_sweep,
    d_zero,
    dgamma_lower_bound,
    ground_states,
    mass_closed_form,
    pair_residuals,
)

BRANCH_NOTE = (
    "branch labels follow the (t1, t2) ordering: asymmetric-left has t1 < t2 "
    "(profile mass concentrated on the right half-line); asymmetric-right is "
    "its mirror image"
)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; remap to the usage code 1
    def error(self, message):
        raise UsageError(message)


def fmt(x) -> str:
    return format(float(x), ".17g")


def _json_text(obj, indent=0) -> str:
    """Deterministic JSON with 17-significant-digit floats and sorted keys."""
    pad = "  " * indent
    pad1 = "  " * (indent + 1)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [
            f'{pad1}"{k}": {_json_text(obj[k], indent + 1)}' for k in sorted(obj)
        ]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad1}{_json_text(v, indent + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        return fmt(obj)
    if isinstance(obj, str):
        return '"' + obj.replace("\\", "\\\\").replace('"', '\\"') + '"'
    raise TypeError(f"cannot serialize {type(obj)}")


def write_atomic(path: str, text: str) -> None:
    """Write via a temp file and rename, so failures leave no partial file."""
    d = os.path.dirname(os.path.abspath(path))
    try:
        fd, tmp = tempfile.mkstemp(dir=d, prefix=".lognls-")
        try:
            with os.fdopen(fd, "w") as fh:
                fh.write(text)
            os.replace(tmp, path)
        except BaseException:
            os.unlink(tmp)
            raise
    except OSError as exc:
        raise UsageError(f"cannot write {path}: {exc}") from exc


def field_csv(field: Field) -> str:
    lines = ["x,re_u,im_u"]
    x = field.grid.nodes()
    for xi, ui in zip(x, field.values):
        lines.append(f"{fmt(xi)},{fmt(ui.real)},{fmt(ui.imag)}")
    return "\n".join(lines) + "\n"


def load_config_file(path: str) -> dict[str, str]:
    out = {}
    try:
        with open(path) as fh:
            for lineno, raw in enumerate(fh, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise UsageError(f"{path}:{lineno}: expected 'key = value'")
                key, val = line.split("=", 1)
                out[key.strip().replace("-", "_")] = val.strip()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    return out


def merge_options(args: argparse.Namespace, defaults: dict) -> dict:
    """defaults < config file < explicit flags (flags parse to non-None)."""
    merged = dict(defaults)
    if getattr(args, "config", None):
        filemap = load_config_file(args.config)
        for key, val in filemap.items():
            if key not in defaults:
                raise UsageError(f"unknown config key '{key}'")
            merged[key] = type(defaults[key])(val) if defaults[key] is not None else val
    for key in defaults:
        val = getattr(args, key, None)
        if val is not None:
            merged[key] = val
    return merged


def _grid(opt) -> Grid:
    return Grid(float(opt["grid_l"]), int(opt["grid_n"]))


def _require_gamma(opt) -> float:
    gamma = float(opt["gamma"])
    if gamma <= 0:
        raise UsageError(f"gamma must be positive (attractive case), got {gamma}")
    return gamma


_BRANCHES = {b.value: b for b in Branch}
_SEEDS = {"symmetric": Seed.SYMMETRIC, "left": Seed.LEFT, "right": Seed.RIGHT}


# ----------------------------------------------------------------------
# commands
# ----------------------------------------------------------------------

GROUND_DEFAULTS = dict(gamma=2.0, omega=0.0, grid_n=4096, grid_l=20.0, out="")


def cmd_ground(args) -> int:
    opt = merge_options(args, GROUND_DEFAULTS)
    gamma = _require_gamma(opt)
    omega = float(opt["omega"])
    grid = _grid(opt)
    branches = []
    print(f"# ground states at gamma={fmt(gamma)} omega={fmt(omega)}")
    print(f"# {BRANCH_NOTE}")
    for params in ground_states(gamma, omega):
        field = sample_profile(params, grid)
        rep = report(field, gamma, omega)
        res = stationary_residual(field, gamma, omega)
        r1, r2 = pair_residuals(params.t1, params.t2, gamma)
        branches.append(
            {
                "branch": params.branch.value,
                "t1": params.t1,
                "t2": params.t2,
                "pair_residuals": [r1, r2],
                "action_closed_form": action_closed_form(params),
                "mass_closed_form": mass_closed_form(params),
                "report": {
                    "form": rep.form,
                    "mass": rep.mass,
                    "entropy": rep.entropy,
                    "energy": rep.energy,
                    "action": rep.action,
                    "nehari": rep.nehari,
                },
                "stationary_residual": {
                    "interior": res.interior,
                    "bc1": res.bc1,
                    "bc2": res.bc2,
                },
            }
        )
        print(
            f"{params.branch.value}: t1={fmt(params.t1)} t2={fmt(params.t2)} "
            f"action={fmt(action_closed_form(params))} "
            f"residuals=({fmt(res.interior)}, {fmt(res.bc1)}, {fmt(res.bc2)})"
        )
    doc = {
        "command": "ground",
        "gamma": gamma,
        "omega": omega,
        "grid": {"L": grid.L, "n": grid.n},
        "branch_convention": BRANCH_NOTE,
        "branches": branches,
    }
    if opt["out"]:
        write_atomic(opt["out"], _json_text(doc) + "\n")
    return 0


BIFURCATE_DEFAULTS = dict(
    gamma_min=1.0, gamma_max=3.0, steps=41, omega=0.0, out="", threads=1
)


def cmd_bifurcate(args) -> int:
    opt = merge_options(args, BIFURCATE_DEFAULTS)
    gmin, gmax = float(opt["gamma_min"]), float(opt["gamma_max"])
    steps = int(opt["steps"])
    omega = float(opt["omega"])
    if gmin <= 0 or gmax < gmin:
        raise UsageError(f"need 0 < gamma_min <= gamma_max, got [{gmin}, {gmax}]")
    if gmin == gmax:
        steps = 1
    elif steps < 2:
        raise UsageError("steps must be >= 2 for a nontrivial range")
    points = bifurcation_sweep(gmin, gmax, steps, omega, threads=int(opt["threads"]))
    lines = ["gamma,branch,t1,t2,action"]
    transition = None
    prev_gamma = None
    for pt in points:
        if transition is None and len(pt.branches) == 3:
            transition = (prev_gamma, pt.gamma)
        prev_gamma = pt.gamma
        for params, action in zip(pt.branches, pt.actions):
            lines.append(
                f"{fmt(pt.gamma)},{params.branch.value},{fmt(params.t1)},"
                f"{fmt(params.t2)},{fmt(action)}"
            )
    if opt["out"]:
        write_atomic(opt["out"], "\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    if transition is None:
        print(f"# no branch-count transition in [{fmt(gmin)}, {fmt(gmax)}]")
    elif transition[0] is None:
        print(f"# three branches already present at gamma={fmt(transition[1])}")
    else:
        print(
            f"# symmetry breaking detected in ({fmt(transition[0])}, {fmt(transition[1])}]"
        )
    return 0


MINIMIZE_DEFAULTS = dict(
    gamma=2.0, omega=0.0, seed="symmetric", grid_n=4096, grid_l=20.0,
    max_iter=4000, out="",
)


def cmd_minimize(args) -> int:
    opt = merge_options(args, MINIMIZE_DEFAULTS)
    gamma = _require_gamma(opt)
    omega = float(opt["omega"])
    if opt["seed"] not in _SEEDS:
        raise UsageError(f"seed must be one of {sorted(_SEEDS)}, got {opt['seed']}")
    grid = _grid(opt)
    opts = MinimizeOptions(max_iter=int(opt["max_iter"]))
    result = minimize_dgamma(gamma, omega, seed=_SEEDS[opt["seed"]], grid=grid, opts=opts)
    states = ground_states(gamma, omega)
    closed = min(action_closed_form(p) for p in states)
    bound = dgamma_lower_bound(gamma, omega)
    half_line = d_zero(omega)
    print(f"least action (half squared L2 norm): {fmt(result.value)}")
    print(f"closed form minimum over branches:   {fmt(closed)}")
    print(f"relative difference:                 {fmt((result.value - closed) / closed)}")
    print(f"lower bound:                         {fmt(bound)}")
    print(f"half-line upper bound:               {fmt(half_line)}")
    print(
        f"iterations={result.iterations} interior_residual={fmt(result.residual.interior)}"
    )
    if not (bound <= result.value < half_line):
        print("warning: computed value escapes the analytic bracket", file=sys.stderr)
    if opt["out"]:
        write_atomic(opt["out"], field_csv(result.field))
    return 0


EVOLVE_DEFAULTS = dict(
    gamma=2.0, omega=0.0, branch="symmetric", grid_n=4096, grid_l=20.0,
    dt=1e-3, t_end=10.0, m=0.0, record_every=100, snapshot_every=0,
    snapshot_prefix="", out="",
)


def cmd_evolve(args) -> int:
    opt = merge_options(args, EVOLVE_DEFAULTS)
    gamma = _require_gamma(opt)
    omega = float(opt["omega"])
    if opt["branch"] not in _BRANCHES:
        raise UsageError(f"branch must be one of {sorted(_BRANCHES)}")
    branch = _BRANCHES[opt["branch"]]
    grid = _grid(opt)
    m = float(opt["m"]) or None  # 0 means the raw floored logarithm
    snap = int(opt["snapshot_every"]) or None
    config = EvolutionConfig(
        dt=float(opt["dt"]), t_end=float(opt["t_end"]), m=m,
        record_every=int(opt["record_every"]), snapshot_every=snap,
    )
    params = dynamics._pick_branch(gamma, omega, branch)
    u0 = sample_profile(params, grid)
    result = evolve(u0, gamma, config, reference=params)
    lines = ["t,mass,energy,dist_sigma,dist_w"]
    for r in result.records:
        lines.append(
            f"{fmt(r.time)},{fmt(r.mass)},{fmt(r.energy)},"
            f"{fmt(r.orbital_distance_sigma)},{fmt(r.orbital_distance_w)}"
        )
    if opt["out"]:
        write_atomic(opt["out"], "\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    prefix = opt["snapshot_prefix"]
    if prefix:
        for t, field in result.snapshots:
            write_atomic(f"{prefix}_t{fmt(t)}.csv", field_csv(field))
    m0 = result.records[0].mass
    drift = max(abs(r.mass - m0) for r in result.records) / m0
    print(f"# mass drift (relative): {fmt(drift)}")
    return 0


STABILITY_DEFAULTS = dict(
    gamma=2.0, omega=0.0, branch="symmetric", delta=1e-2, t_end=50.0,
    trials=8, rng_seed=0, grid_n=4096, grid_l=20.0, dt=1e-3,
    record_every=125, metric="sigma", threads=1, out="",
)


def cmd_stability(args) -> int:
    opt = merge_options(args, STABILITY_DEFAULTS)
    gamma = _require_gamma(opt)
    omega = float(opt["omega"])
    if opt["branch"] not in _BRANCHES:
        raise UsageError(f"branch must be one of {sorted(_BRANCHES)}")
    metric = {"sigma": Metric.SIGMA_ONLY, "w": Metric.FULL_W}.get(opt["metric"])
    if metric is None:
        raise UsageError("metric must be 'sigma' or 'w'")
    summary = stability_experiment(
        gamma=gamma,
        omega=omega,
        branch=_BRANCHES[opt["branch"]],
        perturbation_size=float(opt["delta"]),
        t_end=float(opt["t_end"]),
        trials=int(opt["trials"]),
        rng_seed=int(opt["rng_seed"]),
        grid=_grid(opt),
        dt=float(opt["dt"]),
        record_every=int(opt["record_every"]),
        metric=metric,
        threads=int(opt["threads"]),
    )
    doc = {
        "command": "stability",
        "gamma": summary.gamma,
        "omega": summary.omega,
        "branch": summary.branch.value,
        "branch_convention": BRANCH_NOTE,
        "perturbation_size": summary.perturbation_size,
        "metric": summary.metric.value,
        "mode": "exploratory (excited state; no stability claim)"
        if summary.exploratory
        else "gated",
        "rng_seed": int(opt["rng_seed"]),
        "trials": [
            {
                "trial": t.trial,
                "initial_distance": t.initial_distance,
                "max_distance": t.max_distance,
                "ratio": t.ratio,
            }
            for t in summary.trials
        ],
        "max_ratio": summary.max_ratio,
    }
    text = _json_text(doc) + "\n"
    if opt["out"]:
        write_atomic(opt["out"], text)
    else:
        print(text, end="")
    print(f"# max ratio over {len(summary.trials)} trials: {fmt(summary.max_ratio)}",
          file=sys.stderr)
    return 0


# ----------------------------------------------------------------------
# parser
# ----------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--config", help="key = value config file; flags override it")


def build_parser() -> _Parser:
    parser = _Parser(prog="lognls",
                     description="Ground states and stability of the logarithmic "
                                 "Schrodinger equation with a delta-prime defect")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ground", help="classify all standing-wave branches")
    _add_common(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--grid-l", dest="grid_l", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_ground)

    p = sub.add_parser("bifurcate", help="sweep gamma and emit branch data")
    _add_common(p)
    p.add_argument("--gamma-min", dest="gamma_min", type=float)
    p.add_argument("--gamma-max", dest="gamma_max", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--omega", type=float)
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_bifurcate)

    p = sub.add_parser("minimize", help="variational least-action search")
    _add_common(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--seed", choices=sorted(_SEEDS))
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--grid-l", dest="grid_l", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_minimize)

    p = sub.add_parser("evolve", help="evolve a standing wave and record diagnostics")
    _add_common(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--branch", choices=sorted(_BRANCHES))
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--grid-l", dest="grid_l", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--m", type=float, help="clamping level (>= 1); omit for raw log")
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--snapshot-every", dest="snapshot_every", type=int)
    p.add_argument("--snapshot-prefix", dest="snapshot_prefix")
    p.add_argument("--out")
    p.set_defaults(func=cmd_evolve)

    p = sub.add_parser("stability", help="random-perturbation orbital stability runs")
    _add_common(p)
    p.add_argument("--gamma", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--branch", choices=sorted(_BRANCHES))
    p.add_argument("--delta", type=float)
    p.add_argument("--t-end", dest="t_end", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--rng-seed", dest="rng_seed", type=int)
    p.add_argument("--grid-n", dest="grid_n", type=int)
    p.add_argument("--grid-l", dest="grid_l", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--record-every", dest="record_every", type=int)
    p.add_argument("--metric", choices=["sigma", "w"])
    p.add_argument("--threads", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_stability)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConvergenceError, dynamics.EvolutionAborted, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        if isinstance(exc, ConvergenceError) and exc.residual is not None:
            print(
                f"  last action {fmt(exc.action)}, interior residual "
                f"{fmt(exc.residual.interior)} after {exc.iterations} iterations",
                file=sys.stderr,
            )
        return 2


if __name__ == "__main__":
    sys.exit(main())
