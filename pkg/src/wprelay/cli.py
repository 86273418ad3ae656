"""Command line: ``wprelay solve | sweep | validate``.

Exit codes: 0 success (converged), 2 finished but flagged non-converged
(or a validation failure), 1 input or runtime error.  The worker count for
sweeps comes from the ``WPRELAY_WORKERS`` environment variable (default 1).
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .baselines import SCHEMES, run_scheme
from .records import failure_row, result_row, to_csv
from .scenario import NetworkScenario, ScenarioError, draw_channels, load_scenario, scenario_from_dict

try:  # Python 3.11+
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("wprelay")

AXES = ("p_o_mw", "zeta", "u_scale")
WORKERS_ENV = "WPRELAY_WORKERS"


class CliError(Exception):
    pass


# -------------------------------------------------------------------- sweeps


@dataclass(frozen=True)
class SweepSpec:
    base: NetworkScenario
    axis: str
    values: tuple
    schemes: tuple
    seeds: tuple
    output: Path | None = None


def parse_sweep(text: str, base_dir: Path = Path(".")) -> SweepSpec:
    """Sweep file (TOML): base, axis, values, schemes, seeds, optional output and [overrides]."""
    try:
        d = tomllib.loads(text)
    except tomllib.TOMLDecodeError as e:
        raise CliError(f"sweep file: {e}") from e
    known = {"base", "axis", "values", "schemes", "seeds", "output", "overrides"}
    extra = set(d) - known
    if extra:
        raise CliError(f"sweep file: unknown key(s) {sorted(extra)}")
    base = NetworkScenario()
    if "base" in d:
        base = load_scenario(base_dir / d["base"])
    if "overrides" in d:
        base = scenario_from_dict(d["overrides"], base)
    axis = d.get("axis")
    if axis not in AXES:
        raise CliError(f"sweep file: axis must be one of {AXES}, got {axis!r}")
    values = tuple(float(v) for v in d.get("values", ()))
    schemes = tuple(d.get("schemes", ()))
    if not values:
        raise CliError("sweep file: values must be nonempty")
    if not schemes:
        raise CliError("sweep file: schemes must be nonempty")
    bad = [s for s in schemes if s not in SCHEMES]
    if bad:
        raise CliError(f"sweep file: unknown scheme(s) {bad}; expected {SCHEMES}")
    seeds = tuple(int(s) for s in d.get("seeds", (base.seed,)))
    if not seeds:
        raise CliError("sweep file: seeds must be nonempty")
    for v in values:  # fail early on out-of-range axis values
        base.replace(**{axis: v})
    out = Path(base_dir / d["output"]) if "output" in d else None
    return SweepSpec(base, axis, values, schemes, seeds, out)


def sweep_points(spec: SweepSpec) -> list[tuple]:
    """(scenario, axis, value, scheme, seed) in output order: value, then scheme, then seed."""
    pts = []
    for v in spec.values:
        sc = spec.base.replace(**{spec.axis: v})
        for scheme in spec.schemes:
            for seed in spec.seeds:
                pts.append((sc.replace(seed=seed), spec.axis, v, scheme, seed))
    return pts


def _channels(sc: NetworkScenario, seed: int):
    # the same fading draw for every axis value of a seed (common random numbers)
    return draw_channels(sc, np.random.default_rng(seed))


def run_point(point: tuple) -> list[str]:
    sc, axis, value, scheme, seed = point
    try:
        res = run_scheme(scheme, sc, _channels(sc, seed))
        return result_row(res, axis, value, seed)
    except Exception as e:  # recorded, the sweep goes on
        log.warning("sweep point %s=%s %s seed %d failed: %s", axis, value, scheme, seed, e)
        return failure_row(sc.N, axis, value, scheme, seed, f"{type(e).__name__}: {e}")


def run_sweep(spec: SweepSpec, workers: int = 1) -> str:
    pts = sweep_points(spec)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run_point, pts))
    else:
        rows = [run_point(p) for p in pts]
    return to_csv(rows, spec.base.N)


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        w = int(raw)
    except ValueError as e:
        raise CliError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from e
    if w < 1:
        raise CliError(f"{WORKERS_ENV} must be >= 1")
    return w


# ------------------------------------------------------------------ commands


def cmd_solve(args) -> int:
    sc = load_scenario(args.scenario) if args.scenario else NetworkScenario()
    if args.eps is not None:
        sc = sc.replace(epsilon=args.eps)
    seed = sc.seed if args.seed is None else args.seed
    sc = sc.replace(seed=seed)
    res = run_scheme(args.scheme, sc, _channels(sc, seed))
    sys.stdout.write(to_csv([result_row(res, "none", None, seed)], sc.N))
    return 0 if res.converged else 2


def cmd_sweep(args) -> int:
    path = Path(args.sweep_file)
    try:
        text = path.read_text()
    except OSError as e:
        raise CliError(f"cannot read sweep file: {e}") from e
    spec = parse_sweep(text, path.parent)
    if args.eps is not None:
        spec = SweepSpec(spec.base.replace(epsilon=args.eps), spec.axis, spec.values, spec.schemes, spec.seeds,
                         spec.output)
    out = Path(args.out) if args.out else spec.output
    csv_text = run_sweep(spec, _workers())
    if out is None:
        sys.stdout.write(csv_text)
    else:
        out.write_text(csv_text)
    return 0


def cmd_validate(args) -> int:
    from .validation import run_suite

    results = run_suite(only=args.only)
    width = max(len(r.name) for r in results)
    for r in results:
        print(f"{r.name:<{width}}  {'PASS' if r.passed else 'FAIL'}  {r.detail}")
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed")
    return 0 if n_fail == 0 else 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wprelay", description="Robust throughput optimization for wireless-powered relays")
    p.add_argument("--log-level", default="WARNING", help="logging level (default WARNING)")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("solve", help="solve one scenario and print a CSV row")
    s.add_argument("--scenario", help="scenario TOML file (default: built-in scenario)")
    s.add_argument("--scheme", default="OPT-TS", choices=SCHEMES)
    s.add_argument("--seed", type=int, help="channel seed (default: the scenario's seed)")
    s.add_argument("--eps", type=float, help="override the convergence tolerance")
    s.add_argument("--log-level", dest="log_level_sub", help=argparse.SUPPRESS)
    s.set_defaults(func=cmd_solve)

    w = sub.add_parser("sweep", help="run a parameter sweep and write CSV")
    w.add_argument("sweep_file")
    w.add_argument("--out", help="output CSV path (default: sweep file 'output' or stdout)")
    w.add_argument("--eps", type=float, help="override the convergence tolerance")
    w.add_argument("--log-level", dest="log_level_sub", help=argparse.SUPPRESS)
    w.set_defaults(func=cmd_sweep)

    v = sub.add_parser("validate", help="run the property suite")
    v.add_argument("--only", action="append", help="run only checks whose name contains this text")
    v.add_argument("--log-level", dest="log_level_sub", help=argparse.SUPPRESS)
    v.set_defaults(func=cmd_validate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return 0 if e.code == 0 else 1
    level = getattr(args, "log_level_sub", None) or args.log_level
    try:
        logging.basicConfig(level=getattr(logging, str(level).upper()), format="%(levelname)s %(name)s: %(message)s")
    except (AttributeError, TypeError, ValueError):
        print(f"error: unknown log level {level!r}", file=sys.stderr)
        return 1
    try:
        return args.func(args)
    except (ScenarioError, CliError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - last-resort guard
        log.debug("unhandled error", exc_info=True)
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return 1


def main_entry() -> None:  # console script
    sys.exit(main())
