"""Command-line front end: run experiments from JSON configs and compare them.

Three verbs:

    pmpo run config.json --seeds 3 --output-dir out/
    pmpo validate config.json
    pmpo compare a.json b.json --output-dir cmp/

run writes one seed_<s>.csv per seed, a summary.json aggregate, and a
curve.svg of the metric trajectory. validate prints every problem it finds
(one per line, naming the offending field) and exits 2 if any. compare
requires all configs to share a regime and writes an overlaid median/IQR
plot plus a JSON table of final metrics.

Exit codes: 0 success (a collapsed run is still a completed run; the flag
lands in summary.json), 2 for configuration problems, 3 for runtime errors.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .em_exact import DiscreteDistribution, run_em
from .envs import (
    BENCHMARK_KINDS,
    BenchmarkFunction,
    GridworldMdp,
    SequenceTask,
    default_gridworld,
    generate_offline_dataset,
    greedy_policy_from_q,
    gridworld_from_json,
    value_iteration,
)
from .errors import ConfigError
from .kl import KlMode
from .objectives import LossSpec
from .svgplot import LinePlot
from .trainer import (
    LabelConfig,
    OptimizerConfig,
    TrainerConfig,
    records_to_csv,
    train_bandit,
    train_mdp,
    train_offline,
    train_sequence,
)

REGIMES = ("bandit", "mdp", "sequence", "offline", "em-exact")
EM_CSV_SCHEMA = "pmpo-em-csv-1"


@dataclass
class RunPlan:
    """A parsed config: what to run, on what target, with which seeds."""

    regime: str
    name: str
    seeds: list[int]
    trainer: TrainerConfig | None = None
    function: BenchmarkFunction | None = None
    mdp: GridworldMdp | None = None
    task: SequenceTask | None = None
    dataset_spec: dict | None = None
    em_spec: dict | None = None

    @property
    def metric_direction(self) -> str:
        return "min" if self.regime == "bandit" else "max"


def _get(doc: dict, key: str, expected, default, problems: list[str], where: str):
    if key not in doc:
        return default
    value = doc[key]
    if expected is float and isinstance(value, int) and not isinstance(value, bool):
        value = float(value)
    if expected is int and isinstance(value, bool):
        problems.append(f"{where}{key} must be an integer, got {value!r}")
        return default
    if not isinstance(value, expected):
        name = expected.__name__ if isinstance(expected, type) else "/".join(t.__name__ for t in expected)
        problems.append(f"{where}{key} must be {name}, got {type(value).__name__}")
        return default
    return value


def _parse_kl_mode(raw, problems: list[str]) -> KlMode:
    if raw is None:
        return KlMode.closed_form()
    if isinstance(raw, str):
        if raw == "closed_form":
            return KlMode.closed_form()
        if raw == "per_token":
            return KlMode.per_token()
        if raw == "monte_carlo":
            return KlMode.monte_carlo(64)
        problems.append(f"loss.kl_mode must be closed_form, per_token, or monte_carlo, got {raw!r}")
        return KlMode.closed_form()
    if isinstance(raw, dict):
        kind = raw.get("kind")
        if kind == "monte_carlo":
            count = raw.get("sample_count", 64)
            if not isinstance(count, int) or isinstance(count, bool) or count < 1:
                problems.append(f"loss.kl_mode.sample_count must be a positive integer, got {count!r}")
                return KlMode.monte_carlo(64)
            return KlMode.monte_carlo(count)
        if kind in ("closed_form", "per_token"):
            return KlMode.closed_form() if kind == "closed_form" else KlMode.per_token()
        problems.append(f"loss.kl_mode.kind must name a KL estimator, got {kind!r}")
        return KlMode.closed_form()
    problems.append(f"loss.kl_mode must be a string or object, got {type(raw).__name__}")
    return KlMode.closed_form()


def _parse_trainer(doc: dict, problems: list[str]) -> TrainerConfig:
    known = {
        "algorithm", "loss", "label", "optimizer", "samples_per_condition",
        "ref_update_interval", "iterations", "seed", "eval_interval",
        "grad_clip_norm", "max_steps", "init_mean", "init_std",
        "context_order", "mixture", "labeled_fraction", "eval_episodes",
    }
    for key in sorted(set(doc) - known):
        problems.append(f"unknown trainer field {key!r}")

    loss_doc = _get(doc, "loss", dict, {}, problems, "trainer.")
    for key in sorted(set(loss_doc) - {"alpha", "beta", "kl_mode", "eta", "dpo_beta", "ipo_beta"}):
        problems.append(f"unknown loss field {key!r}")
    loss = LossSpec(
        alpha=_get(loss_doc, "alpha", float, 0.5, problems, "loss."),
        beta=_get(loss_doc, "beta", float, 0.5, problems, "loss."),
        kl_mode=_parse_kl_mode(loss_doc.get("kl_mode"), problems),
        eta=_get(loss_doc, "eta", float, 1.0, problems, "loss."),
        dpo_beta=_get(loss_doc, "dpo_beta", float, 1.0, problems, "loss."),
        ipo_beta=_get(loss_doc, "ipo_beta", float, 1.0, problems, "loss."),
    )
    label_doc = _get(doc, "label", dict, {}, problems, "trainer.")
    for key in sorted(set(label_doc) - {"rule", "k", "baseline_kind"}):
        problems.append(f"unknown label field {key!r}")
    label = LabelConfig(
        rule=_get(label_doc, "rule", str, "top_k", problems, "label."),
        k=_get(label_doc, "k", int, 2, problems, "label."),
        baseline_kind=_get(label_doc, "baseline_kind", str, "mean", problems, "label."),
    )
    opt_doc = _get(doc, "optimizer", dict, {}, problems, "trainer.")
    for key in sorted(set(opt_doc) - {"kind", "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon"}):
        problems.append(f"unknown optimizer field {key!r}")
    optimizer = OptimizerConfig(
        kind=_get(opt_doc, "kind", str, "adam", problems, "optimizer."),
        learning_rate=_get(opt_doc, "learning_rate", float, 0.05, problems, "optimizer."),
        adam_beta1=_get(opt_doc, "adam_beta1", float, 0.9, problems, "optimizer."),
        adam_beta2=_get(opt_doc, "adam_beta2", float, 0.999, problems, "optimizer."),
        adam_epsilon=_get(opt_doc, "adam_epsilon", float, 1e-8, problems, "optimizer."),
    )
    interval = doc.get("ref_update_interval", 1)
    if interval is not None and (not isinstance(interval, int) or isinstance(interval, bool)):
        problems.append(f"trainer.ref_update_interval must be a positive integer or null, got {interval!r}")
        interval = 1
    init_mean = doc.get("init_mean")
    if init_mean is not None:
        if isinstance(init_mean, list) and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in init_mean):
            init_mean = tuple(float(v) for v in init_mean)
        else:
            problems.append("trainer.init_mean must be a list of numbers")
            init_mean = None
    mixture = doc.get("mixture")
    if mixture is not None and not isinstance(mixture, dict):
        problems.append(f"trainer.mixture must map term names to weights, got {type(mixture).__name__}")
        mixture = None
    config = TrainerConfig(
        algorithm=_get(doc, "algorithm", str, "pmpo", problems, "trainer."),
        loss=loss,
        label=label,
        optimizer=optimizer,
        samples_per_condition=_get(doc, "samples_per_condition", int, 4, problems, "trainer."),
        ref_update_interval=interval,
        iterations=_get(doc, "iterations", int, 500, problems, "trainer."),
        seed=_get(doc, "seed", int, 0, problems, "trainer."),
        eval_interval=_get(doc, "eval_interval", int, 25, problems, "trainer."),
        grad_clip_norm=_get(doc, "grad_clip_norm", float, 10.0, problems, "trainer."),
        max_steps=_get(doc, "max_steps", int, 100, problems, "trainer."),
        init_mean=init_mean,
        init_std=_get(doc, "init_std", float, None, problems, "trainer.") if "init_std" in doc else None,
        context_order=_get(doc, "context_order", int, 1, problems, "trainer."),
        mixture=mixture,
        labeled_fraction=_get(doc, "labeled_fraction", float, 1.0, problems, "trainer."),
        eval_episodes=_get(doc, "eval_episodes", int, 100, problems, "trainer."),
    )
    problems.extend(config.problems())
    return config


def _parse_mdp(doc, problems: list[str]) -> GridworldMdp | None:
    if doc is None or doc == "default":
        return default_gridworld()
    if not isinstance(doc, dict):
        problems.append(f"mdp must be 'default' or an object, got {type(doc).__name__}")
        return None
    try:
        return gridworld_from_json(doc)
    except Exception as exc:
        problems.append(f"mdp: {exc}")
        return None


def parse_config(doc: dict) -> tuple[RunPlan | None, list[str]]:
    """Turn a config document into a RunPlan, collecting every problem found."""
    problems: list[str] = []
    if not isinstance(doc, dict):
        return None, ["config must be a JSON object"]
    regime = doc.get("regime")
    if regime not in REGIMES:
        problems.append(f"regime must be one of {REGIMES}, got {regime!r}")
        return None, problems
    name = _get(doc, "name", str, regime, problems, "")
    seeds = doc.get("seeds", [0])
    if not (isinstance(seeds, list) and seeds and all(isinstance(s, int) and not isinstance(s, bool) and s >= 0 for s in seeds)):
        problems.append(f"seeds must be a non-empty list of nonnegative integers, got {seeds!r}")
        seeds = [0]
    plan = RunPlan(regime=regime, name=name, seeds=list(seeds))

    if regime == "em-exact":
        em = _get(doc, "em", dict, None, problems, "")
        if em is None:
            problems.append("em-exact configs require an 'em' object with prior, f, tau")
        else:
            prior = em.get("prior")
            f = em.get("f")
            tau = em.get("tau", 1.0)
            iters = em.get("iterations", 50)
            if not (isinstance(prior, list) and prior and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in prior)):
                problems.append("em.prior must be a non-empty list of numbers")
            if not (isinstance(f, list) and f and all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in f)):
                problems.append("em.f must be a non-empty list of numbers")
            if isinstance(prior, list) and isinstance(f, list) and len(prior) != len(f):
                problems.append(f"em.prior and em.f lengths differ ({len(prior)} vs {len(f)})")
            if not isinstance(tau, (int, float)) or isinstance(tau, bool) or not np.isfinite(tau) or tau <= 0:
                problems.append(f"em.tau must be a positive number, got {tau!r}")
            if not isinstance(iters, int) or isinstance(iters, bool) or iters < 1:
                problems.append(f"em.iterations must be a positive integer, got {iters!r}")
            if not problems:
                try:
                    DiscreteDistribution.from_weights(np.asarray(prior, dtype=float))
                except Exception as exc:
                    problems.append(f"em.prior: {exc}")
            plan.em_spec = {"prior": prior, "f": f, "tau": float(tau) if isinstance(tau, (int, float)) else 1.0,
                            "iterations": iters if isinstance(iters, int) else 50}
        return (plan if not problems else None), problems

    plan.trainer = _parse_trainer(_get(doc, "trainer", dict, {}, problems, ""), problems)

    if regime == "bandit":
        fn_doc = _get(doc, "function", dict, {}, problems, "")
        kind = fn_doc.get("kind", "sphere")
        dim = fn_doc.get("dimension", 2)
        if kind not in BENCHMARK_KINDS:
            problems.append(f"function.kind must be one of {BENCHMARK_KINDS}, got {kind!r}")
        elif not isinstance(dim, int) or isinstance(dim, bool) or dim < 1 or (kind == "rosenbrock" and dim < 2):
            problems.append(f"function.dimension invalid for {kind}: {dim!r}")
        else:
            plan.function = BenchmarkFunction(kind, dim)
            if plan.trainer.init_mean is not None and len(plan.trainer.init_mean) != dim:
                problems.append(
                    f"trainer.init_mean length {len(plan.trainer.init_mean)} does not match function.dimension {dim}"
                )
    elif regime in ("mdp", "offline"):
        plan.mdp = _parse_mdp(doc.get("mdp", "default"), problems)
        if regime == "offline":
            ds = _get(doc, "dataset", dict, {}, problems, "")
            episodes = ds.get("episodes", 20)
            corruption = ds.get("corruption_fraction", 0.7)
            max_steps = ds.get("max_steps", 40)
            if not isinstance(episodes, int) or isinstance(episodes, bool) or episodes < 1:
                problems.append(f"dataset.episodes must be a positive integer, got {episodes!r}")
            if not isinstance(corruption, (int, float)) or isinstance(corruption, bool) or not 0.0 <= corruption <= 1.0:
                problems.append(f"dataset.corruption_fraction must be in [0, 1], got {corruption!r}")
            if not isinstance(max_steps, int) or isinstance(max_steps, bool) or max_steps < 1:
                problems.append(f"dataset.max_steps must be a positive integer, got {max_steps!r}")
            plan.dataset_spec = {"episodes": episodes, "corruption_fraction": corruption, "max_steps": max_steps}
            if plan.trainer.algorithm != "mixture":
                problems.append("offline configs require trainer.algorithm 'mixture'")
    elif regime == "sequence":
        seq = _get(doc, "sequence", dict, {}, problems, "")
        vocab = seq.get("vocab_size", 4)
        length = seq.get("length", 6)
        target = seq.get("target_token", 0)
        ok = True
        for field_name, v, minimum in (("vocab_size", vocab, 2), ("length", length, 1), ("target_token", target, 0)):
            if not isinstance(v, int) or isinstance(v, bool) or v < minimum:
                problems.append(f"sequence.{field_name} must be an integer >= {minimum}, got {v!r}")
                ok = False
        if ok and target >= vocab:
            problems.append(f"sequence.target_token must be < vocab_size, got {target} >= {vocab}")
            ok = False
        if ok:
            plan.task = SequenceTask(vocab, length, target)
    return (plan if not problems else None), problems


def load_config(path: str) -> dict:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        return json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc


def plan_from_file(path: str, seed_override: int | None = None) -> RunPlan:
    doc = load_config(path)
    plan, problems = parse_config(doc)
    if problems:
        raise ConfigError("\n".join(problems))
    if seed_override is not None:
        plan.seeds = list(range(seed_override))
    return plan


@dataclass
class SeedOutcome:
    seed: int
    csv_text: str
    metrics: np.ndarray
    final_metric: float
    best_metric: float
    collapsed: bool
    halted: str | None
    wall_clock_ms: float


def _train_for_seed(plan: RunPlan, seed: int) -> SeedOutcome:
    config = replace(plan.trainer, seed=seed)
    if plan.regime == "bandit":
        result = train_bandit(plan.function, config)
    elif plan.regime == "mdp":
        result = train_mdp(plan.mdp, config)
    elif plan.regime == "sequence":
        result = train_sequence(plan.task, config)
    else:
        _, q_star = value_iteration(plan.mdp)
        expert = greedy_policy_from_q(q_star)
        dataset = generate_offline_dataset(
            plan.mdp,
            expert,
            plan.dataset_spec["corruption_fraction"],
            plan.dataset_spec["episodes"],
            np.random.default_rng([seed, 1001]),
            plan.dataset_spec["max_steps"],
        )
        result = train_offline(dataset, plan.mdp, config)
    metrics = np.array([r.metric for r in result.records], dtype=float)
    finite = metrics[np.isfinite(metrics)]
    if finite.size:
        best = float(finite.min() if plan.metric_direction == "min" else finite.max())
    else:
        best = float("nan")
    return SeedOutcome(
        seed=seed,
        csv_text=records_to_csv(result.records),
        metrics=metrics,
        final_metric=result.final_metric,
        best_metric=best,
        collapsed=result.collapsed,
        halted=result.halted,
        wall_clock_ms=float(sum(r.wall_clock_ms for r in result.records)),
    )


def _run_em_plan(plan: RunPlan) -> SeedOutcome:
    spec = plan.em_spec
    prior = DiscreteDistribution.from_weights(np.asarray(spec["prior"], dtype=float))
    trajectory = run_em(prior, np.asarray(spec["f"], dtype=float), spec["tau"], spec["iterations"])
    lines = [f"# schema: {EM_CSV_SCHEMA}", "iteration,expected_value"]
    lines.extend(f"{it.iteration},{repr(float(it.expected_value))}" for it in trajectory)
    metrics = np.array([it.expected_value for it in trajectory], dtype=float)
    return SeedOutcome(
        seed=0,
        csv_text="\n".join(lines) + "\n",
        metrics=metrics,
        final_metric=float(metrics[-1]),
        best_metric=float(metrics.max()),
        collapsed=False,
        halted=None,
        wall_clock_ms=0.0,
    )


def execute_plan(plan: RunPlan, quiet: bool = True) -> list[SeedOutcome]:
    if plan.regime == "em-exact":
        return [_run_em_plan(plan)]
    outcomes = []
    for seed in plan.seeds:
        started = time.perf_counter()
        outcome = _train_for_seed(plan, seed)
        if not quiet:
            flag = " [collapsed]" if outcome.collapsed else ""
            print(
                f"{plan.name} seed {seed}: final metric {outcome.final_metric:.6g}{flag} "
                f"({time.perf_counter() - started:.1f}s)"
            )
        outcomes.append(outcome)
    return outcomes


def _metric_matrix(outcomes: list[SeedOutcome]) -> np.ndarray:
    width = max(o.metrics.size for o in outcomes)
    grid = np.full((len(outcomes), width), np.nan)
    for i, o in enumerate(outcomes):
        grid[i, : o.metrics.size] = o.metrics
    return grid


def _quartile_rows(grid: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        q1 = np.nanpercentile(grid, 25, axis=0)
        median = np.nanmedian(grid, axis=0)
        q3 = np.nanpercentile(grid, 75, axis=0)
    return q1, median, q3


def summarize_plan(plan: RunPlan, outcomes: list[SeedOutcome]) -> dict:
    finals = np.array([o.final_metric for o in outcomes], dtype=float)
    bests = np.array([o.best_metric for o in outcomes], dtype=float)
    summary = {
        "name": plan.name,
        "regime": plan.regime,
        "metric_direction": plan.metric_direction,
        "seeds": [o.seed for o in outcomes],
        "final_metric_by_seed": {str(o.seed): o.final_metric for o in outcomes},
        "best_metric_by_seed": {str(o.seed): o.best_metric for o in outcomes},
        "median_final_metric": float(np.median(finals)),
        "final_metric_quartiles": [float(np.percentile(finals, 25)), float(np.percentile(finals, 75))],
        "median_best_metric": float(np.median(bests)),
        "collapsed_by_seed": {str(o.seed): o.collapsed for o in outcomes},
        "any_collapsed": any(o.collapsed for o in outcomes),
        "halted_by_seed": {str(o.seed): o.halted for o in outcomes},
        "wall_clock_ms_total": float(sum(o.wall_clock_ms for o in outcomes)),
    }
    if plan.regime == "em-exact":
        diffs = np.diff(outcomes[0].metrics)
        summary["monotone"] = bool(np.all(diffs >= -1e-12))
    return summary


def _plan_curve(plan: RunPlan, outcomes: list[SeedOutcome], plot: LinePlot, label: str, color_index: int):
    from .svgplot import PALETTE

    grid = _metric_matrix(outcomes)
    xs = np.arange(grid.shape[1], dtype=float)
    q1, median, q3 = _quartile_rows(grid)
    color = PALETTE[color_index % len(PALETTE)]
    if len(outcomes) > 1:
        plot.add_band(xs, q1, q3, color)
    plot.add_series(label, xs, median, color)


def write_run_outputs(plan: RunPlan, outcomes: list[SeedOutcome], output_dir: str) -> dict:
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    for o in outcomes:
        (out / f"seed_{o.seed}.csv").write_text(o.csv_text)
    summary = summarize_plan(plan, outcomes)
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    y_label = "objective value" if plan.regime == "bandit" else (
        "expected value" if plan.regime == "em-exact" else "return"
    )
    log_y = plan.regime == "bandit"
    plot = LinePlot(title=plan.name, x_label="iteration", y_label=y_label, log_y=log_y)
    _plan_curve(plan, outcomes, plot, plan.name, 0)
    (out / "curve.svg").write_text(plot.render())
    return summary


def _cmd_validate(args) -> int:
    doc = load_config(args.config)
    plan, problems = parse_config(doc)
    if problems:
        for p in problems:
            print(p)
        return 2
    if not args.quiet:
        print(f"ok: {plan.regime} config with seeds {plan.seeds}")
    return 0


def _cmd_run(args) -> int:
    plan = plan_from_file(args.config, args.seeds)
    outcomes = execute_plan(plan, quiet=args.quiet)
    summary = write_run_outputs(plan, outcomes, args.output_dir)
    if not args.quiet:
        print(f"wrote {len(outcomes)} run(s) to {args.output_dir}")
        print(f"median final metric: {summary['median_final_metric']:.6g}")
        if summary["any_collapsed"]:
            print("warning: at least one run collapsed")
    return 0


def _cmd_compare(args) -> int:
    plans = [plan_from_file(path, args.seeds) for path in args.configs]
    regimes = {p.regime for p in plans}
    if len(regimes) > 1:
        raise ConfigError(f"compare requires a shared regime, got {sorted(regimes)}")
    names = [p.name for p in plans]
    if len(set(names)) != len(names):
        names = [f"{p.name}#{i}" for i, p in enumerate(plans)]
    out = Path(args.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    regime = plans[0].regime
    y_label = "objective value" if regime == "bandit" else ("expected value" if regime == "em-exact" else "return")
    plot = LinePlot(title="comparison", x_label="iteration", y_label=y_label, log_y=regime == "bandit")
    table = {"regime": regime, "entries": []}
    for i, (plan, label) in enumerate(zip(plans, names)):
        outcomes = execute_plan(plan, quiet=args.quiet)
        summary = summarize_plan(plan, outcomes)
        _plan_curve(plan, outcomes, plot, label, i)
        table["entries"].append(
            {
                "name": label,
                "seeds": summary["seeds"],
                "median_final_metric": summary["median_final_metric"],
                "final_metric_quartiles": summary["final_metric_quartiles"],
                "median_best_metric": summary["median_best_metric"],
                "final_metric_by_seed": summary["final_metric_by_seed"],
                "any_collapsed": summary["any_collapsed"],
            }
        )
    table["final_metric_table"] = {
        e["name"]: e["median_final_metric"] for e in table["entries"]
    }
    (out / "comparison.json").write_text(json.dumps(table, indent=2, sort_keys=True) + "\n")
    (out / "comparison.svg").write_text(plot.render())
    if not args.quiet:
        for e in table["entries"]:
            print(f"{e['name']}: median final metric {e['median_final_metric']:.6g}")
        print(f"wrote comparison to {args.output_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pmpo", description="Preference-based policy optimization experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run a config across seeds and write CSV/JSON/SVG outputs")
    run_p.add_argument("config")
    run_p.add_argument("--output-dir", default="out")
    run_p.add_argument("--seeds", type=int, default=None, help="run seeds 0..N-1 instead of the config's list")
    run_p.add_argument("--quiet", action="store_true")
    val_p = sub.add_parser("validate", help="check a config and list every problem found")
    val_p.add_argument("config")
    val_p.add_argument("--quiet", action="store_true")
    cmp_p = sub.add_parser("compare", help="run several configs of one regime and overlay their curves")
    cmp_p.add_argument("configs", nargs="+")
    cmp_p.add_argument("--output-dir", default="out")
    cmp_p.add_argument("--seeds", type=int, default=None)
    cmp_p.add_argument("--quiet", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_compare(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
