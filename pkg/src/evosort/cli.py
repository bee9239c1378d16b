"""``evosort`` command line.

Exit codes: 0 success with zero violations, 1 violations found, 2 bad
flags, 3 unreadable or invalid config, 4 output path not writable.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import experiments as X

EXIT_OK = 0
EXIT_VIOLATIONS = 1
EXIT_USAGE = 2
EXIT_CONFIG = 3
EXIT_OUTPUT = 4

COMMANDS = ("simulate", "steady-state", "convergence", "lemma-checks", "balls-bins", "verify-all")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _int_list(text: str) -> list[int]:
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _seeds(text: str) -> list[int]:
    """``20`` means seeds 0..19; ``3,5,8`` lists them explicitly."""
    if "," in text:
        return _int_list(text)
    try:
        count = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad seed spec {text!r}")
    if count < 1:
        raise argparse.ArgumentTypeError("seed count must be positive")
    return list(range(count))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="evosort", description="Sorting under random adjacent swaps.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--n", type=int)
    p.add_argument("--n-list", type=_int_list)
    p.add_argument("--alpha", type=int)
    p.add_argument("--sorter")
    p.add_argument("--init", dest="init_policy",
                   choices=("uniform_random", "reversed", "identity"))
    p.add_argument("--steps", type=int)
    p.add_argument("--rounds", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--seeds", type=_seeds)
    p.add_argument("--sample-every", type=int)
    p.add_argument("--burn-in", type=int)
    p.add_argument("--instrument", action="store_true", default=None)
    p.add_argument("--config")
    p.add_argument("--out")
    p.add_argument("--c", type=float)
    p.add_argument("--trials", type=int)
    p.add_argument("--beta", type=float)
    p.add_argument("--workers", type=int)
    return p


# per-command defaults, below both the config file and the flags
COMMAND_DEFAULTS = {
    "lemma-checks": {"n": [8, 16, 32], "seeds": list(range(20))},
    "balls-bins": {"n": 10_000},
    "steady-state": {"n": [128, 256, 512, 1024], "seeds": list(range(20))},
    "convergence": {"n": [128, 256, 512, 1024], "seeds": list(range(20)),
                    "sorter": "quick_then_insertion"},
}


def effective_config(args) -> X.ExperimentConfig:
    """Command defaults, then config file values, then any flag that was given."""
    data = dict(COMMAND_DEFAULTS.get(args.command, {}))
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise _ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise _ConfigError("config must be a JSON object")
        data.update(loaded)
    data["preset"] = args.command
    overrides = {
        "alpha": args.alpha, "sorter": args.sorter, "init_policy": args.init_policy,
        "steps": args.steps, "rounds": args.rounds, "sample_every": args.sample_every,
        "burn_in": args.burn_in, "instrument": args.instrument, "out": args.out,
        "c": args.c, "trials": args.trials, "beta": args.beta, "workers": args.workers,
    }
    for key, value in overrides.items():
        if value is not None:
            data[key] = value
    if args.n_list is not None:
        data["n"] = args.n_list
    elif args.n is not None:
        data["n"] = args.n
    if args.seeds is not None:
        data["seeds"] = args.seeds
    elif args.seed is not None:
        data["seeds"] = [args.seed]
    try:
        return X.ExperimentConfig.from_dict(data)
    except (TypeError, ValueError) as exc:
        raise _ConfigError(f"invalid configuration: {exc}") from exc


class _ConfigError(Exception):
    pass


def _prepare_out(cfg) -> Path | None:
    if cfg.out is None:
        return None
    return X.ensure_dir(cfg.out)


# ----------------------------------------------------------------------
# commands

def cmd_simulate(cfg, out) -> tuple[int, dict]:
    if cfg.steps is None and cfg.rounds is None:
        cfg.steps = 4 * max(cfg.n_list) ** 2
    summary = {"config": cfg.to_dict(), "runs": []}
    bad = 0
    for n in cfg.n_list:
        for seed in cfg.seeds:
            if cfg.instrument:
                from .frozen_analysis import instrumented_run
                if cfg.alpha != 1 or X.parse_sorter(cfg.sorter).value != "repeated_insertion":
                    raise _ConfigError("--instrument needs alpha 1 and repeated insertion")
                rep = instrumented_run(n, seed, rounds=cfg.rounds or 3,
                                       check_every=cfg.check_every,
                                       init_policy=cfg.init_policy,
                                       record_every=cfg.sample_every)
                rows = rep.series
                records = rep.rounds_seen
                violations = rep.violations
                final_I = rows[-1][1] if rows else None
            else:
                res = X.run_series(n, cfg.alpha, cfg.sorter, seed, cfg.steps, cfg.rounds,
                                   cfg.sample_every, cfg.init_policy)
                rows = X.records_from_series(res.series)
                records = res.records
                violations = X.round_violations(records, n)
                violations.pop("over_half_n_squared")
                final_I = res.final_inversions
            bad += sum(violations.values())
            if out is not None:
                X.write_series_csv(out / f"series_n{n}_seed{seed}.csv", rows)
            summary["runs"].append({
                "n": n, "seed": seed, "final_I": final_I,
                "rounds": [r.as_dict() for r in records],
                "good_swap_fraction": X.good_swap_fraction(records, cfg.alpha),
                "violations": violations,
            })
            print(f"n={n} seed={seed} rounds={sum(r.complete for r in records)} "
                  f"final I={final_I} violations={sum(violations.values())}")
    summary["total_violations"] = bad
    return (EXIT_VIOLATIONS if bad else EXIT_OK), summary


def cmd_steady_state(cfg, out) -> tuple[int, dict]:
    s = X.steady_state_summary(cfg.n_list, cfg.seeds, cfg.alpha, cfg.sorter,
                               steps=cfg.steps, burn_in=cfg.burn_in,
                               sample_every=None if cfg.sample_every == 1 else cfg.sample_every,
                               init_policy=cfg.init_policy, workers=cfg.workers)
    for n in cfg.n_list:
        e = s["per_n"][n]
        print(f"n={n:>6}  median I/n={e['median']:.4f}  mean={e['mean']:.4f}  max={e['max']:.4f}")
    for r in s["ratios"]:
        print(f"n {r['n_from']} -> {r['n_to']}: relative change {r['relative_change']:.3f}")
    return EXIT_OK, {"config": cfg.to_dict(), "summary": s}


def cmd_convergence(cfg, out) -> tuple[int, dict]:
    beta = cfg.beta
    if beta is None:
        s = X.steady_state_summary(cfg.n_list, cfg.seeds[:3], cfg.alpha, "repeated_insertion",
                                   workers=cfg.workers)
        beta = 2 * max(e["median"] for e in s["per_n"].values())
        print(f"beta from steady state: {beta:.4f}")
    init = cfg.init_policy if cfg.init_policy != "uniform_random" else "reversed"
    c = X.convergence_time(cfg.n_list, cfg.seeds, beta, cfg.alpha, cfg.sorter,
                           init_policy=init, budget=cfg.steps, workers=cfg.workers)
    censored = 0
    for n in cfg.n_list:
        e = c["per_n"][n]
        censored += e["censored"]
        print(f"n={n:>6}  median hit={e['median']}  /(n log2 n)={e['over_n_log_n']}  "
              f"/n^2={e['over_n_squared']}  censored={e['censored']}")
    return (EXIT_VIOLATIONS if censored else EXIT_OK), {"config": cfg.to_dict(), "summary": c}


def cmd_lemma_checks(cfg, out) -> tuple[int, dict]:
    s = X.lemma_checks(cfg.n_list, cfg.seeds, rounds=cfg.rounds or 3,
                       check_every=cfg.check_every, init_policy=cfg.init_policy,
                       workers=cfg.workers)
    for k, v in s["violations"].items():
        print(f"{k:>24}: {v}")
    print(f"runs={s['runs']} steps={s['steps']} swaps={s['swaps']} "
          f"total violations={s['total_violations']}")
    code = EXIT_VIOLATIONS if s["total_violations"] else EXIT_OK
    return code, {"config": cfg.to_dict(), "summary": s}


def cmd_balls_bins(cfg, out) -> tuple[int, dict]:
    seed = cfg.seeds[0]
    res = {}
    exceed = 0
    for n in cfg.n_list:
        for policy in ("none", "adversarial_lowest"):
            r = X.balls_and_bins_trial(n, cfg.c, cfg.trials, policy, seed)
            res[f"{n}/{policy}"] = {"max_sum": r.max_sum, "threshold": r.threshold,
                                    "exceedances": r.exceedances, "balls": r.balls}
            exceed += r.exceedances
            print(f"n={n} policy={policy}: max sum of squares {r.max_sum} "
                  f"(threshold 3c^2n = {r.threshold:g}, exceeded in {r.exceedances} trials)")
    guaranteed = cfg.c > math.e
    if not guaranteed:
        print("note: c <= e, the bound carries no guarantee here")
    code = EXIT_VIOLATIONS if exceed and guaranteed else EXIT_OK
    return code, {"config": cfg.to_dict(), "summary": res}


def cmd_verify_all(cfg, out) -> tuple[int, dict]:
    from .verification import run_all

    results = run_all(workers=cfg.workers, echo=print)
    failed = [r.number for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    summary = {"criteria": [{"number": r.number, "name": r.name, "passed": r.passed,
                             "detail": r.detail} for r in results]}
    return (EXIT_VIOLATIONS if failed else EXIT_OK), summary


HANDLERS = {
    "simulate": cmd_simulate,
    "steady-state": cmd_steady_state,
    "convergence": cmd_convergence,
    "lemma-checks": cmd_lemma_checks,
    "balls-bins": cmd_balls_bins,
    "verify-all": cmd_verify_all,
}


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = effective_config(args)
    except _ConfigError as exc:
        print(f"evosort: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        out = _prepare_out(cfg)
    except OSError as exc:
        print(f"evosort: output path not writable: {exc}", file=sys.stderr)
        return EXIT_OUTPUT
    try:
        code, summary = HANDLERS[args.command](cfg, out)
    except _ConfigError as exc:
        print(f"evosort: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if out is not None:
        try:
            X.write_summary_json(out / "summary.json", summary)
        except OSError as exc:
            print(f"evosort: output path not writable: {exc}", file=sys.stderr)
            return EXIT_OUTPUT
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
