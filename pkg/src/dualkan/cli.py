"""Command-line front end.

    dualkan train --preset e1-kan-rard --seed 0 --out runs/e1
    dualkan train --config my.json --set total_steps=0
    dualkan evaluate --checkpoint runs/e1/final.json --problem e1
    dualkan compare --problem e1 --seed 0 --out runs/cmp
    dualkan sweep --problem e1 --axis neurons --values 3,5,7 --out runs/sweep
    dualkan verify-problems
    dualkan export-field --checkpoint runs/e1/final.json --problem e1 --resolution 200 --out grid.csv

Exit codes: 0 success, 2 configuration/validation error, 3 numerical
failure (non-finite loss or failed verification), 4 I/O error.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from .config import PRESET_NAMES, ConfigError, ExperimentConfig, preset
from .networks import DualNetwork, load_checkpoint
from .problems import PROBLEM_IDS, builtin, verify_manufactured
from .reporting import ERROR_COLUMNS, evaluate_errors, export_field_grid, write_table
from .sampling import build_collocation
from .training import NonFiniteLossError, train

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_IO = 0, 2, 3, 4
COMPARE_ROWS = (("PINNs", "pinn"), ("KANs", "kan"), ("PINNs-A", "pinn-rard"), ("KANs-A", "kan-rard"))

log = logging.getLogger("dualkan")


def run_experiment(cfg: ExperimentConfig, out_dir=None, evaluate: bool = True, config_text: str | None = None):
    """Build problem, collocation and networks from a config and train."""
    problem = cfg.problem()
    net = cfg.network(problem)
    colloc = build_collocation(problem.decomposition, cfg.plan(), cfg.sampling_seed)
    dual = DualNetwork.initialise(net, net, problem.decomposition, seed=cfg.seed)
    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
        with open(os.path.join(out_dir, "config.json"), "w") as fh:
            fh.write(config_text if config_text is not None else cfg.dumps())
    report = train(dual, problem, colloc, cfg.train_config(), out_dir=out_dir, evaluate=evaluate, n_test=cfg.n_test)
    if out_dir is not None and report.errors is not None:
        report.errors.save(os.path.join(out_dir, f"{cfg.tag}.errors.json"))
    return report


def run_compare(problem_id: str, seed: int = 0, out_dir=None, overrides: dict | None = None):
    """PINNs / KANs / PINNs-A / KANs-A with one shared initial collocation set."""
    rows, reports = [], {}
    for label, suffix in COMPARE_ROWS:
        base = preset(f"{problem_id}-{suffix}")
        # a rard override only reshapes the adaptive rows
        extra = {k: v for k, v in (overrides or {}).items() if k != "rard" or base.rard is not None}
        cfg = base.updated(seed=seed, collocation_seed=seed, **extra)
        sub = os.path.join(out_dir, cfg.tag) if out_dir is not None else None
        rep = run_experiment(cfg, sub)
        reports[label] = rep
        rows.append((label, rep.errors.row()))
    text = write_table(rows, ERROR_COLUMNS,
                       os.path.join(out_dir, f"{problem_id}_compare.csv") if out_dir else None,
                       os.path.join(out_dir, f"{problem_id}_compare.txt") if out_dir else None,
                       label="networks")
    return text, reports


def run_sweep(problem_id: str, axis: str, values, seed: int = 0, out_dir=None, overrides: dict | None = None,
              base: str | None = None):
    """One KAN run per value of the hidden width (``neurons``) or grid size (``G``)."""
    if not values:
        raise ConfigError("values: need at least one value")
    if axis not in ("neurons", "G"):
        raise ConfigError("axis: must be 'neurons' or 'G'")
    base_cfg = preset(base or f"{problem_id}-kan")
    rows, reports = [], {}
    for v in values:
        v = int(v)
        if axis == "neurons":
            widths = [2] + [v] * (len(base_cfg.widths) - 2) + [1]
            cfg = base_cfg.updated(widths=widths, seed=seed, **(overrides or {}))
        else:
            cfg = base_cfg.updated(G=v, seed=seed, **(overrides or {}))
        sub = os.path.join(out_dir, f"{axis}_{v}") if out_dir is not None else None
        rep = run_experiment(cfg, sub)
        reports[v] = rep
        rows.append((str(v), rep.errors.row()))
    text = write_table(rows, ERROR_COLUMNS,
                       os.path.join(out_dir, f"{problem_id}_sweep_{axis}.csv") if out_dir else None,
                       os.path.join(out_dir, f"{problem_id}_sweep_{axis}.txt") if out_dir else None,
                       label=axis)
    return text, reports


# -- argument handling ------------------------------------------------------------

def _parse_overrides(items) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, raw = item.split("=", 1)
        try:
            out[key] = json.loads(raw)
        except json.JSONDecodeError:
            out[key] = raw
    return out


def _load_config(args) -> tuple[ExperimentConfig, str | None]:
    if bool(args.config) == bool(args.preset):
        raise ConfigError("config: give exactly one of --config or --preset")
    text = None
    if args.config:
        with open(args.config) as fh:
            text = fh.read()
        try:
            d = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        cfg = ExperimentConfig.from_dict(d)
    else:
        cfg = preset(args.preset)
    changes = _parse_overrides(args.set)
    if args.seed is not None:
        changes["seed"] = args.seed
    if changes:
        cfg = cfg.updated(**changes)
        text = None
    return cfg, text


def _check_problem(pid: str) -> str:
    if pid not in PROBLEM_IDS:
        raise ConfigError(f"problem: unknown id {pid!r}; expected one of {', '.join(PROBLEM_IDS)}")
    return pid


def cmd_train(args) -> int:
    cfg, text = _load_config(args)
    out = args.out or cfg.output_dir or os.path.join("runs", cfg.tag)
    rep = run_experiment(cfg, out, config_text=text)
    print(f"{cfg.tag}: {rep.steps} steps in {rep.wall_clock:.1f}s, output in {out}")
    print(rep.errors.to_json())
    return EXIT_OK


def cmd_evaluate(args) -> int:
    problem = builtin(_check_problem(args.problem))
    dual, _ = load_checkpoint(args.checkpoint, problem.decomposition)
    rep = evaluate_errors(dual, problem, n_test=args.n_test, seed=args.seed or 0)
    text = rep.to_json()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    print(text)
    return EXIT_OK


def cmd_compare(args) -> int:
    pid = _check_problem(args.problem)
    out = args.out or os.path.join("runs", f"{pid}_compare")
    os.makedirs(out, exist_ok=True)
    text, _ = run_compare(pid, args.seed or 0, out, _parse_overrides(args.set))
    print(text)
    return EXIT_OK


def cmd_sweep(args) -> int:
    pid = _check_problem(args.problem)
    try:
        values = [int(v) for v in args.values.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"values: {exc}") from exc
    out = args.out or os.path.join("runs", f"{pid}_sweep_{args.axis}")
    os.makedirs(out, exist_ok=True)
    text, _ = run_sweep(pid, args.axis, values, args.seed or 0, out, _parse_overrides(args.set))
    print(text)
    return EXIT_OK


def cmd_verify(args) -> int:
    ids = PROBLEM_IDS if args.problem in (None, "all") else [_check_problem(args.problem)]
    ok = True
    for pid in ids:
        rep = verify_manufactured(builtin(pid), n_check=args.n_check, tol=args.tol, jump_tol=args.jump_tol)
        print("\n".join(rep.lines()))
        ok &= rep.passed
    return EXIT_OK if ok else EXIT_NUMERIC


def cmd_export(args) -> int:
    problem = builtin(_check_problem(args.problem))
    dual, _ = load_checkpoint(args.checkpoint, problem.decomposition)
    worst = export_field_grid(dual, problem, args.resolution, args.out)
    print(f"wrote {args.out} ({args.resolution}x{args.resolution}), max |error| {worst:.3e}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dualkan", description="Dual MLP/KAN solvers for 2D elliptic interface problems")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train one configuration")
    t.add_argument("--config", help="JSON experiment config")
    t.add_argument("--preset", help=f"named preset ({', '.join(PRESET_NAMES)})")
    t.add_argument("--seed", type=int)
    t.add_argument("--out")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field (JSON value)")
    t.set_defaults(fn=cmd_train)

    e = sub.add_parser("evaluate", help="region-wise errors of a checkpoint")
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--problem", required=True)
    e.add_argument("--n-test", type=int, default=10000)
    e.add_argument("--seed", type=int)
    e.add_argument("--out")
    e.set_defaults(fn=cmd_evaluate)

    c = sub.add_parser("compare", help="PINNs / KANs / PINNs-A / KANs-A table")
    c.add_argument("--problem", required=True)
    c.add_argument("--seed", type=int)
    c.add_argument("--out")
    c.add_argument("--set", action="append", metavar="KEY=VALUE")
    c.set_defaults(fn=cmd_compare)

    s = sub.add_parser("sweep", help="KAN width or grid-size sweep")
    s.add_argument("--problem", required=True)
    s.add_argument("--axis", choices=("neurons", "G"), required=True)
    s.add_argument("--values", required=True, help="comma separated, e.g. 3,5,7")
    s.add_argument("--seed", type=int)
    s.add_argument("--out")
    s.add_argument("--set", action="append", metavar="KEY=VALUE")
    s.set_defaults(fn=cmd_sweep)

    v = sub.add_parser("verify-problems", help="finite-difference check of the manufactured data")
    v.add_argument("--problem", default="all")
    v.add_argument("--n-check", type=int, default=1000)
    v.add_argument("--tol", type=float, default=1e-5)
    v.add_argument("--jump-tol", type=float, default=1e-8)
    v.set_defaults(fn=cmd_verify)

    x = sub.add_parser("export-field", help="write a field grid CSV from a checkpoint")
    x.add_argument("--checkpoint", required=True)
    x.add_argument("--problem", required=True)
    x.add_argument("--resolution", type=int, default=200)
    x.add_argument("--out", required=True)
    x.set_defaults(fn=cmd_export)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteLossError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
