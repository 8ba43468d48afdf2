"""Command-line interface.

Exit codes: 0 success, 1 invalid configuration, 2 runtime divergence.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

import numpy as np

from dqhc import output
from dqhc.controllers import Controller
from dqhc.hybrid_sim import NonFiniteState, run, run_batch, sweep_delta
from dqhc.scenarios import (
    PRESETS,
    SWEEP_DELTAS,
    ConfigError,
    UnknownPreset,
    load_config,
    preset,
)

EXIT_OK, EXIT_CONFIG, EXIT_DIVERGED = 0, 1, 2

log = logging.getLogger("dqhc")


def _resolve_seed(arg_seed):
    if arg_seed is not None:
        return arg_seed
    env = os.environ.get("DQHC_SEED")
    if env:
        try:
            return int(env)
        except ValueError:
            raise ConfigError(f"DQHC_SEED must be an integer, got {env!r}") from None
    return None


def _scenario(args, default_preset=None):
    seed = _resolve_seed(args.seed)
    if getattr(args, "config", None):
        scenario = load_config(args.config)
    else:
        scenario = preset(args.preset or default_preset)
    if seed is not None:
        scenario = scenario.with_seed(seed)
    return scenario


def _add_source(p, default=None):
    src = p.add_mutually_exclusive_group(required=default is None)
    src.add_argument("--preset", choices=PRESETS, default=default)
    src.add_argument("--config", type=Path, help="scenario JSON file")
    p.add_argument("--seed", type=int, default=None, help="noise seed (fallback: $DQHC_SEED)")
    p.add_argument("--out", type=Path, default=Path("out"), help="output directory")


def _parse_floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"expected comma-separated numbers, got {text!r}") from None


def cmd_simulate(args):
    scenario = _scenario(args)
    result = run(scenario)
    args.out.mkdir(parents=True, exist_ok=True)
    stem = scenario.label or "run"
    output.write_csv(result, args.out / f"{stem}.csv")
    summary = output.summary_dict(
        result, preset=args.preset if not args.config else None, controller=scenario.controller.value
    )
    output.write_json(summary, args.out / f"{stem}_summary.json")
    if args.svg:
        output.write_svg(result, args.out / f"{stem}.svg", title=stem)
    s = result.summary
    ct = "n/a" if s.convergence_time is None else f"{s.convergence_time:.2f} s"
    print(
        f"{stem}: jumps={s.jumps} sign_flips={s.sign_flips} "
        f"convergence={ct} terminal_V={s.terminal_V:.3e} -> {args.out}"
    )
    return EXIT_OK


def cmd_sweep(args):
    base = _scenario(args, default_preset="fig4_delta_sweep")
    if base.controller != Controller.HYBRID:
        raise ConfigError("sweep-delta needs a hybrid-controller scenario")
    deltas = _parse_floats(args.deltas) if args.deltas else list(base.deltas or SWEEP_DELTAS)
    for d in deltas:
        if not 0.0 < d < 1.0:
            raise ConfigError(f"delta must lie in (0, 1), got {d}")
    first = base.noise.seed
    seeds = list(range(first, first + args.runs))
    rows = sweep_delta(base, deltas, seeds=seeds)
    args.out.mkdir(parents=True, exist_ok=True)
    lines = ["delta,median_jumps,mean_jumps,max_jumps,median_convergence_time_s"]
    table = []
    for r in rows:
        mct = r.median_convergence_time
        lines.append(
            f"{r.delta!r},{r.median_jumps!r},{float(np.mean(r.jumps))!r},{max(r.jumps)},"
            f"{'' if mct is None else repr(mct)}"
        )
        table.append(
            {"delta": r.delta, "jumps": r.jumps, "median_jumps": r.median_jumps,
             "median_convergence_time_s": mct}
        )
        print(f"delta={r.delta:<5g} median jumps={r.median_jumps:<5g} max={max(r.jumps)}")
    stem = base.label or "sweep"
    (args.out / f"{stem}_sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    output.write_json({"label": stem, "seeds": seeds, "rows": table}, args.out / f"{stem}_sweep.json")
    return EXIT_OK


def cmd_compare(args):
    base = _scenario(args, default_preset="fig3_compare")
    names = [c.strip() for c in args.controllers.split(",") if c.strip()]
    try:
        controllers = [Controller(c) for c in names]
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    first = base.noise.seed
    seeds = list(range(first, first + args.runs))
    args.out.mkdir(parents=True, exist_ok=True)
    stem = base.label or "compare"
    report = {"label": stem, "seeds": seeds, "controllers": {}}
    for c in controllers:
        scenario = base.with_controller(c)
        results = run_batch(scenario, seeds=seeds)
        output.write_csv(results[0], args.out / f"{stem}_{c.value}.csv")
        if args.svg:
            output.write_svg(results[0], args.out / f"{stem}_{c.value}.svg", title=f"{stem} {c.value}")
        flips = [r.summary.sign_flips for r in results]
        jumps = [r.summary.jumps for r in results]
        report["controllers"][c.value] = {
            "median_sign_flips": float(np.median(flips)),
            "median_jumps": float(np.median(jumps)),
            "runs": [output.summary_dict(r, controller=c.value) for r in results],
        }
        print(f"{c.value:<14} median sign flips={np.median(flips):<8g} median jumps={np.median(jumps):g}")
    output.write_json(report, args.out / f"{stem}_compare.json")
    return EXIT_OK


def cmd_validate(args):
    scenario = load_config(args.config)
    print(f"{args.config}: ok ({scenario.controller.value}, {scenario.integration.n_steps} steps)")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="dqhc", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and write CSV/JSON (and SVG)")
    _add_source(p)
    p.add_argument("--svg", action="store_true", help="also write SVG plots")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep-delta", help="jump count versus hysteresis width")
    _add_source(p, default="fig4_delta_sweep")
    p.add_argument("--deltas", default=None, help="comma-separated list, e.g. 0.05,0.3,0.9")
    p.add_argument("--runs", type=int, default=1, help="seeds per delta")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("compare", help="run several controllers on one scenario")
    _add_source(p, default="fig3_compare")
    p.add_argument("--controllers", default="hybrid,discontinuous")
    p.add_argument("--runs", type=int, default=1, help="seeds per controller")
    p.add_argument("--svg", action="store_true")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("validate", help="check a scenario config file")
    p.add_argument("--config", type=Path, required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    if getattr(args, "runs", 1) < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, UnknownPreset, FileNotFoundError) as exc:
        msg = exc.args[0] if isinstance(exc, UnknownPreset) else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteState as exc:
        print(f"error: simulation diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
