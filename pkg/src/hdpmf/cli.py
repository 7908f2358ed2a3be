"""Command-line entry point: `run`, `sweep`, and `check-noise`.

Exit codes: 0 on success, 1 on run failure (divergence, failed noise
check), 2 on configuration errors (including missing input files).
"""

from __future__ import annotations

import argparse
import sys
from contextlib import ExitStack
from dataclasses import replace
from pathlib import Path

from .config import ExperimentConfig, parse_config
from .diagnostics import check_noise_composition
from .evaluation import emit_results, load_dataset, run_experiment
from .exceptions import ConfigError, HdpmfError

SWEEP_KEYS = ("eps_uc", "f_uc", "fraction")


def _provenance(cfg: ExperimentConfig, extra: list[str] | None = None) -> list[str]:
    lines = [f"{key} = {value}" for key, value in cfg.effective_items()]
    return lines + (extra or [])


def _load_checked(cfg: ExperimentConfig):
    if not Path(cfg.dataset).exists():
        raise ConfigError("dataset", f"file not found: {cfg.dataset}")
    return load_dataset(cfg)


def cmd_run(config_path: str) -> int:
    cfg = parse_config(config_path)
    dataset = _load_checked(cfg)
    with ExitStack() as stack:
        trace = None
        if cfg.trace is not None:
            trace = stack.enter_context(open(cfg.trace, "w", encoding="utf-8"))
            trace.write("# epoch,kind,index,message_count,gradient_norm\n")
        loss_trace = None
        if cfg.loss_trace is not None:
            loss_trace = stack.enter_context(open(cfg.loss_trace, "w", encoding="utf-8"))
            loss_trace.write("# seed,epoch,objective\n")
        result = run_experiment(cfg, dataset=dataset, trace=trace, loss_trace=loss_trace)
    emit_results([result], cfg.output, provenance=_provenance(cfg))
    print(f"method={cfg.method.value} dataset={cfg.dataset} seeds={len(cfg.seeds)}")
    if result.seed_results:
        print(f"  MSE {result.mse_mean:.4f} +/- {result.mse_std:.4f}")
        print(f"  MAE {result.mae_mean:.4f} +/- {result.mae_std:.4f}")
    for seed, reason in result.failures:
        print(f"  seed {seed} FAILED: {reason}")
    if result.partial:
        print("  (aggregates are partial)")
    print(f"results written to {cfg.output}")
    return 1 if result.failures or not result.seed_results else 0


def cmd_sweep(config_path: str, key: str, values: list[float]) -> int:
    if key not in SWEEP_KEYS:
        raise ConfigError(key, f"sweep key must be one of {SWEEP_KEYS}")
    base = parse_config(config_path)
    if not values:
        raise ConfigError(key, "no sweep values given")
    dataset = _load_checked(base)
    results = []
    failed = False
    for value in values:
        cfg = replace(base, **{key: value})
        if key == "fraction":
            cfg = replace(cfg, split="leave-one-out")
        try:
            cfg.privacy_spec()
            if not (0.0 < cfg.fraction <= 1.0):
                raise ConfigError("fraction", f"must be in (0, 1], got {cfg.fraction}")
        except ConfigError as exc:
            raise ConfigError(key, f"sweep value {value} invalid: {exc}") from None
        result = run_experiment(cfg, dataset=dataset)
        failed = failed or result.partial or not result.seed_results
        results.append(result)
        print(f"{key}={value}: MSE {result.mse_mean:.4f} +/- {result.mse_std:.4f}")
    extra = [f"sweep: {key} = {','.join(str(v) for v in values)}"]
    emit_results(results, base.output, provenance=_provenance(base, extra))
    print(f"results written to {base.output}")
    return 1 if failed else 0


def cmd_check_noise(K: int, delta: float, epsilon: float, raters: list[int], samples: int, seed: int) -> int:
    ok = True
    for r in raters:
        report = check_noise_composition(K, delta, epsilon, r, samples, seed)
        for line in report.lines():
            print(line)
        ok = ok and report.passed
    print("noise check:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hdpmf",
        description="Heterogeneous differentially private matrix factorization experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one experiment from a config file")
    p_run.add_argument("config", help="path to a key = value config file")

    p_sweep = sub.add_parser("sweep", help="re-run the experiment over a parameter grid")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--key", required=True, choices=SWEEP_KEYS)
    p_sweep.add_argument("--values", required=True, help="comma-separated values")

    p_noise = sub.add_parser("check-noise", help="Monte-Carlo check of the noise composition")
    p_noise.add_argument("--dim", type=int, default=10, help="latent dimension K")
    p_noise.add_argument("--delta", type=float, default=4.0, help="rating range")
    p_noise.add_argument("--eps", type=float, default=1.0, help="privacy budget")
    p_noise.add_argument("--raters", default="1,5,50", help="comma-separated rater counts")
    p_noise.add_argument("--samples", type=int, default=1_000_000)
    p_noise.add_argument("--seed", type=int, default=0)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "run":
            return cmd_run(args.config)
        if args.command == "sweep":
            values = [float(v) for v in args.values.split(",") if v.strip()]
            return cmd_sweep(args.config, args.key, values)
        if args.command == "check-noise":
            raters = [int(v) for v in str(args.raters).split(",") if v.strip()]
            return cmd_check_noise(args.dim, args.delta, args.eps, raters, args.samples, args.seed)
        raise AssertionError(args.command)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except HdpmfError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
