"""Command-line entry point: run / sweep / bounds / check.

Configuration is a flat ``key=value`` text file ('#' comments) merged with
``--key=value`` flags, flags winning.  The key schema is closed; anything
unknown is rejected with the offending name.  Exit codes: 0 success, 2
configuration error, 3 budget violation, 4 audit failure.
"""

from __future__ import annotations

import argparse
import sys

from .audits import run_all_audits
from .deviation import BudgetError
from .harness import (
    ALGOS,
    GRAPHS,
    ExperimentConfig,
    build_sem,
    run_many,
    sweep_grid,
    write_bounds_table,
    write_results,
    write_summary,
)
from .theory import BoundParams, lower_bound_curve, upper_bound_curve


class ConfigError(ValueError):
    pass


def _parse_int(key: str, raw: str) -> int:
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected an integer, got {raw!r}") from None


def _parse_float(key: str, raw: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"key {key!r}: expected a number, got {raw!r}") from None


def _parse_seeds(raw: str) -> tuple[int, ...]:
    if "," in raw:
        return tuple(int(x) for x in raw.split(",") if x.strip() != "")
    count = int(raw)
    if count < 1:
        raise ConfigError("key 'seeds': seed count must be at least 1")
    return tuple(range(count))


# key -> (parser, help)
KEY_SCHEMA: dict[str, tuple] = {
    "graph": (str, "preset: " + "|".join(GRAPHS)),
    "n": (lambda k, v: _parse_int(k, v), "node count (chain, confounded_parallel)"),
    "layers": (lambda k, v: tuple(_parse_int(k, x) for x in v.split(",")),
               "hierarchical layer widths, e.g. 9,3"),
    "d": (lambda k, v: _parse_int(k, v), "layer width / degree (hierarchical, theorem2)"),
    "L": (lambda k, v: _parse_int(k, v), "number of layers (hierarchical, theorem2)"),
    "T": (lambda k, v: _parse_int(k, v), "horizon, rounds >= 1"),
    "algo": (str, "policy: " + "|".join(ALGOS)),
    "solver": (str, "index solver: bonus|pga"),
    "arms": (str, "arm set: all|atomic|list:a|b... (nodes dash-joined, 0-based)"),
    "measure": (str, "deviation measure: df|ad|none"),
    "C": (lambda k, v: _parse_float(k, v), "deviation budget, >= 0"),
    "m_c": (lambda k, v: _parse_float(k, v), "per-round deviation cap, > 0"),
    "schedule": (str, "adversary: early_flip|zeroing|none"),
    "seeds": (lambda k, v: _parse_seeds(v), "seed count or explicit list, e.g. 0,1,7"),
    "delta": (lambda k, v: _parse_float(k, v), "confidence level in (0,1); default 1/(2NT)"),
    "c0": (lambda k, v: _parse_float(k, v), "scale constant of the theory curves"),
    "downsample": (lambda k, v: _parse_int(k, v), "write every k-th round (plus the last)"),
    "out": (str, "output path of the result file"),
    "nu_override": (lambda k, v: tuple(_parse_float(k, x) for x in v.split(",")),
                    "explicit noise means, comma-separated"),
}

_REQUIRED = ("graph", "T", "algo")


def read_config_file(path: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    try:
        fh = open(path, "r", encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from None
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key=value")
            key, value = line.split("=", 1)
            pairs[key.strip()] = value.strip()
    return pairs


def parse_config(pairs: dict[str, str]) -> ExperimentConfig:
    """Validate raw key=value pairs against the closed schema."""
    for key in pairs:
        if key not in KEY_SCHEMA:
            raise ConfigError(f"unknown key {key!r}")
    for key in _REQUIRED:
        if key not in pairs:
            raise ConfigError(f"missing required key {key!r}")
    kwargs = {}
    for key, raw in pairs.items():
        parser = KEY_SCHEMA[key][0]
        kwargs[key] = parser(key, raw) if parser is not str else raw
    kwargs.setdefault("seeds", (0,))

    config = ExperimentConfig(**kwargs)
    if config.graph not in GRAPHS:
        raise ConfigError(f"key 'graph': unknown preset {config.graph!r}")
    if config.algo not in ALGOS:
        raise ConfigError(f"key 'algo': unknown policy {config.algo!r}")
    if config.T < 1:
        raise ConfigError("key 'T': horizon must be at least 1")
    if config.solver not in ("bonus", "pga"):
        raise ConfigError(f"key 'solver': unknown solver {config.solver!r}")
    if config.measure not in ("df", "ad", "none"):
        raise ConfigError(f"key 'measure': unknown measure {config.measure!r}")
    if config.schedule not in ("early_flip", "zeroing", "none"):
        raise ConfigError(f"key 'schedule': unknown schedule {config.schedule!r}")
    if config.C < 0:
        raise ConfigError("key 'C': budget must be nonnegative")
    if config.m_c <= 0:
        raise ConfigError("key 'm_c': per-round cap must be positive")
    if config.schedule == "early_flip" and config.C > 0 and config.measure == "none":
        raise ConfigError("key 'measure': early_flip needs measure df or ad")
    if config.delta is not None and not 0.0 < config.delta < 1.0:
        raise ConfigError("key 'delta': must lie in (0, 1)")
    if config.c0 <= 0:
        raise ConfigError("key 'c0': must be positive")
    if config.downsample < 1:
        raise ConfigError("key 'downsample': must be at least 1")
    if len(set(config.seeds)) != len(config.seeds):
        raise ConfigError("key 'seeds': seeds must be distinct")
    if config.C != 0 and config.C < 1 and config.algo in ("robust_lcb", "linsem_ucb_robust"):
        print("warning: 0 < C < 1 is clamped to 1 inside the policy (weights must "
              "stay <= 1)", file=sys.stderr)
    try:
        build_sem(config)  # catches preset/size mismatches early
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    return config


def _merge_cli_config(args: argparse.Namespace) -> ExperimentConfig:
    pairs: dict[str, str] = {}
    if args.config:
        pairs.update(read_config_file(args.config))
    for key in KEY_SCHEMA:
        value = getattr(args, f"key_{key}", None)
        if value is not None:
            pairs[key] = value
    return parse_config(pairs)


def _add_key_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="key=value configuration file")
    for key, (_, help_text) in KEY_SCHEMA.items():
        parser.add_argument(f"--{key}", dest=f"key_{key}", metavar="V", help=help_text)
    parser.add_argument("--workers", type=int, default=1,
                        help="parallel run workers (execution detail, not part of the config)")


def _default_out(config: ExperimentConfig, suffix: str = "") -> str:
    base = f"{config.graph}_{config.algo}_T{config.T}_C{config.C:g}{suffix}"
    return f"results/{base}.csv"


def cmd_run(args: argparse.Namespace) -> int:
    config = _merge_cli_config(args)
    curve = run_many(config, workers=args.workers)
    out = config.out or _default_out(config)
    write_results(curve, out, downsample=config.downsample)
    print(f"wrote {out} (final mean regret {curve.final_regret:.6g} "
          f"over {curve.n_seeds} seeds)")
    return 0


def cmd_sweep(args: argparse.Namespace) -> int:
    config = _merge_cli_config(args)
    try:
        values = [float(x) for x in args.values.split(",")]
    except ValueError:
        raise ConfigError(f"--values: expected numbers, got {args.values!r}") from None
    grid = sweep_grid(config, args.param, values)
    rows = []
    for value, point in zip(values, grid):
        curve = run_many(point, workers=args.workers)
        out = point.out or _default_out(point, suffix=f"_{args.param}{value:g}")
        write_results(curve, out, downsample=point.downsample)
        print(f"wrote {out}")
        rows.append((value, curve))
    summary = args.summary_out or _default_out(config, suffix=f"_sweep_{args.param}_summary")
    write_summary(summary, args.param, rows)
    print(f"wrote {summary}")
    return 0


def cmd_bounds(args: argparse.Namespace) -> int:
    config = _merge_cli_config(args)
    sem = build_sem(config)
    try:
        values = [float(x) for x in args.values.split(",")]
    except ValueError:
        raise ConfigError(f"--values: expected numbers, got {args.values!r}") from None
    rows = []
    for v in values:
        if args.param == "C":
            params = BoundParams(d=max(sem.dag.max_in_degree, 1), L=max(sem.dag.longest_path, 1),
                                 N=sem.dag.n_nodes, m_x=sem.m_x, c0=config.c0)
            c_val, t_val, d_val = v, config.T, params.d
        elif args.param == "d":
            d_val = int(v)
            point = sweep_grid(config, "d", [v])[0]
            psem = build_sem(point)
            params = BoundParams(d=max(psem.dag.max_in_degree, 1),
                                 L=max(psem.dag.longest_path, 1),
                                 N=psem.dag.n_nodes, m_x=psem.m_x, c0=config.c0)
            c_val, t_val = config.C, config.T
        else:
            raise ConfigError(f"--param: must be 'd' or 'C', got {args.param!r}")
        ub = upper_bound_curve(t_val, max(1.0, c_val), params)
        lb = lower_bound_curve(t_val, c_val, params)
        rows.append((v, ub, lb))
    out = args.out_table or _default_out(config, suffix=f"_bounds_{args.param}")
    write_bounds_table(out, args.param, rows)
    for v, ub, lb in rows:
        print(f"{args.param}={v:g}  upper={ub:.6g}  lower={lb:.6g}")
    print(f"wrote {out}")
    return 0


def cmd_check(args: argparse.Namespace) -> int:
    results = run_all_audits()
    failed = 0
    for r in results:
        mark = "ok" if r.ok else "FAIL"
        print(f"[{mark:4s}] {r.name}: {r.detail}")
        failed += 0 if r.ok else 1
    return 0 if failed == 0 else 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="robustcb",
        description="Robust causal bandit benchmark harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment and write its regret curve")
    _add_key_flags(p_run)
    p_run.set_defaults(fn=cmd_run)

    p_sweep = sub.add_parser("sweep", help="repeat an experiment over a d or C grid")
    _add_key_flags(p_sweep)
    p_sweep.add_argument("--param", required=True, choices=("d", "C"))
    p_sweep.add_argument("--values", required=True, help="comma-separated grid values")
    p_sweep.add_argument("--summary-out", help="summary file path")
    p_sweep.set_defaults(fn=cmd_sweep)

    p_bounds = sub.add_parser("bounds", help="tabulate the theoretical bound curves")
    _add_key_flags(p_bounds)
    p_bounds.add_argument("--param", required=True, choices=("d", "C"))
    p_bounds.add_argument("--values", required=True, help="comma-separated grid values")
    p_bounds.add_argument("--out-table", help="bounds table path")
    p_bounds.set_defaults(fn=cmd_bounds)

    p_check = sub.add_parser("check", help="run the built-in invariant audits")
    p_check.set_defaults(fn=cmd_check)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except BudgetError as exc:
        print(f"budget violation: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
