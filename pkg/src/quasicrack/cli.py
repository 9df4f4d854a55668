"""Command line front end: run, sweep, validate, convergence."""

from __future__ import annotations

import argparse
import dataclasses
import sys

from .io_formats import CONFIG_HELP, Config, load_config
from .experiments import (
    convergence_study,
    jump_stats,
    run_experiment,
    run_sweep,
    validate_result,
)


def _config_epilog() -> str:
    lines = ["config file keys (flat 'key = value' lines, '#' comments):"]
    for f in dataclasses.fields(Config):
        default = getattr(Config(), f.name)
        if isinstance(default, tuple):
            default = ",".join(str(v) for v in default) or "(empty)"
        lines.append(f"  {f.name:<16} {CONFIG_HELP[f.name]} [default: {default}]")
    return "\n".join(lines)


def _load(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    if getattr(args, "beta", None) is not None:
        cfg = dataclasses.replace(cfg, beta=args.beta)
    if getattr(args, "output", None) is not None:
        cfg = dataclasses.replace(cfg, output_dir=args.output)
    return cfg


def _progress(step: int, total: int) -> None:
    if step == total or step % max(total // 20, 1) == 0:
        print(f"  step {step}/{total}", file=sys.stderr, flush=True)


def cmd_run(args) -> int:
    cfg = _load(args)
    result, outdir = run_experiment(
        cfg, progress=_progress if not args.quiet else None
    )
    st = jump_stats(result)
    print(f"run finished: {outdir}")
    print(
        f"  tip {result.s[0]:g} -> {result.s[-1]:g}, "
        f"{st['n_jumps']} jumps, largest {st['largest_jump']:g}"
    )
    print(f"  wall time {result.diagnostics['wall_time']:.1f} s")
    return 0


def cmd_sweep(args) -> int:
    cfg = _load(args)
    betas = (
        [float(v) for v in args.beta_list.split(",")]
        if args.beta_list
        else [cfg.beta]
    )
    results, outdir = run_sweep(cfg, betas, jobs=args.jobs)
    print(f"sweep finished: {outdir}")
    for beta, result in zip(betas, results):
        st = jump_stats(result)
        print(
            f"  beta={beta:g}: {st['n_jumps']} jumps, "
            f"mean zone width {st['mean_gap']:g}"
        )
    return 0


def cmd_validate(args) -> int:
    cfg = _load(args)
    from .evolution import run_evolution

    result = run_evolution(cfg)
    checks = validate_result(result)
    failed = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        suffix = f"  ({detail})" if detail else ""
        print(f"{status} {name}{suffix}")
        failed += not ok
    print(f"{len(checks) - failed}/{len(checks)} invariants hold")
    return 1 if failed else 0


def cmd_convergence(args) -> int:
    out = convergence_study(levels=args.levels, outdir=args.output or "out")
    print(f"interpolation exactness error: {out['exactness_error']:.3e}")
    for h, e in zip(out["h"], out["h1_errors"]):
        print(f"  h={h:g}  energy-norm error {e:.6e}")
    print("observed rates:", ", ".join(f"{r:.3f}" for r in out["rates"]))
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="quasicrack",
        description=(
            "Quasi-static crack growth with cohesive plasticity on a "
            "straight path."
        ),
        epilog=_config_epilog(),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one evolution and write artifacts")
    p_run.add_argument("--config", help="config file path (defaults used if absent)")
    p_run.add_argument("--beta", type=float, help="override the yield stress")
    p_run.add_argument("--output", help="override the output directory")
    p_run.add_argument("--quiet", action="store_true", help="no progress output")
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run several yield stresses")
    p_sweep.add_argument("--config", help="config file path")
    p_sweep.add_argument(
        "--beta",
        dest="beta_list",
        help="comma separated yield stresses, e.g. 20,40,80,160",
    )
    p_sweep.add_argument("--output", help="override the output directory")
    p_sweep.add_argument("--jobs", type=int, default=1, help="parallel workers")
    p_sweep.set_defaults(func=cmd_sweep)

    p_val = sub.add_parser("validate", help="run and check every invariant")
    p_val.add_argument("--config", help="config file path")
    p_val.add_argument("--beta", type=float, help="override the yield stress")
    p_val.set_defaults(func=cmd_validate)

    p_conv = sub.add_parser(
        "convergence", help="mesh refinement study on a fixed configuration"
    )
    p_conv.add_argument("--levels", type=int, default=4, help="refinement levels")
    p_conv.add_argument("--output", help="output directory")
    p_conv.set_defaults(func=cmd_convergence)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
