"""Experiment harness CLI: batch episode runs, env serving, weather checks.

``greenflag run`` plays N independent seeded episodes per policy and reports
mean and population standard deviation for the six comparison metrics.
``greenflag serve-env`` exposes the RL environment over the line-JSON
protocol.  ``greenflag validate-weather`` checks a weather CSV against the
documented schema.  Exit codes: 0 success, 2 configuration error, 3 IO error.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .flsim import TABLE_METRICS, EpisodeMetrics, ScenarioConfig, run_episode, trace_csv
from .mdp import serve_protocol
from .policies import POLICY_NAMES, make_policy
from .weather import WeatherCsvError, load_weather_csv

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3


@dataclass(frozen=True)
class ExperimentSpec:
    """One batch experiment: a scenario, a set of policies, and a seed ladder."""

    config: ScenarioConfig
    policies: tuple[str, ...]
    episodes: int = 100
    base_seed: int = 0
    weather_path: str = ""
    out_path: str | None = None
    out_format: str = "csv"
    jobs: int = 1
    trace_dir: str | None = None

    def __post_init__(self) -> None:
        if self.episodes < 1:
            raise ValueError("episodes must be >= 1")
        if self.jobs < 1:
            raise ValueError("jobs must be >= 1")


@dataclass(frozen=True)
class ReportRow:
    policy: str
    metric: str
    mean: float
    std: float


def _episode_task(args) -> EpisodeMetrics:
    config, policy_name, seed, records, trace_path = args
    metrics, outcomes = run_episode(config, make_policy(policy_name), seed, records)
    if trace_path is not None:
        Path(trace_path).write_text(trace_csv(outcomes))
    return metrics


def run_experiment(spec: ExperimentSpec, records=None) -> list[ReportRow]:
    """Run every (policy, episode seed) pair and aggregate the table metrics.

    Episode i uses seed ``base_seed + i``; episodes are independent, so the
    report does not depend on the parallelism degree.
    """
    if records is None:
        records = load_weather_csv(spec.weather_path)
    tasks = []
    for policy_name in spec.policies:
        for i in range(spec.episodes):
            trace_path = None
            if spec.trace_dir is not None:
                Path(spec.trace_dir).mkdir(parents=True, exist_ok=True)
                trace_path = str(
                    Path(spec.trace_dir)
                    / f"{policy_name}_scenario{spec.config.scenario_kind}_seed{spec.base_seed + i}.csv"
                )
            tasks.append((spec.config, policy_name, spec.base_seed + i, records, trace_path))
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            results = list(pool.map(_episode_task, tasks, chunksize=8))
    else:
        results = [_episode_task(t) for t in tasks]

    rows: list[ReportRow] = []
    for p_idx, policy_name in enumerate(spec.policies):
        chunk = results[p_idx * spec.episodes : (p_idx + 1) * spec.episodes]
        table = {name: np.array([m.as_table_row()[name] for m in chunk]) for name in TABLE_METRICS}
        for name in TABLE_METRICS:
            rows.append(
                ReportRow(
                    policy=policy_name,
                    metric=name,
                    mean=float(np.mean(table[name])),
                    std=float(np.std(table[name])),  # population std
                )
            )
    return rows


def emit_report(rows: list[ReportRow], out_format: str = "csv") -> str:
    """Render report rows as ``policy,metric,mean,std`` CSV or a markdown table."""
    if out_format == "csv":
        buf = io.StringIO()
        buf.write("policy,metric,mean,std\n")
        for row in rows:
            buf.write(f'{row.policy},"{row.metric}",{row.mean!r},{row.std!r}\n')
        return buf.getvalue()
    if out_format in ("md", "markdown"):
        policies = list(dict.fromkeys(row.policy for row in rows))
        by_key = {(r.policy, r.metric): r for r in rows}
        lines = ["| Metric | " + " | ".join(policies) + " |", "|---" * (len(policies) + 1) + "|"]
        for metric in TABLE_METRICS:
            cells = []
            for policy in policies:
                row = by_key.get((policy, metric))
                cells.append(f"{row.mean:.1f} (± {row.std:.1f})" if row else "-")
            lines.append(f"| {metric} | " + " | ".join(cells) + " |")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unknown report format {out_format!r}")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="greenflag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run batch experiments and report metrics")
    run_p.add_argument("--scenario", type=int, choices=(1, 2, 3), default=1)
    run_p.add_argument(
        "--policy",
        action="append",
        required=True,
        help="policy name (bes, rss, gss, random); repeat or comma-separate for several",
    )
    run_p.add_argument("--episodes", type=int, default=100)
    run_p.add_argument("--seed", type=int, default=0)
    run_p.add_argument("--weather", required=True, help="weather CSV path")
    run_p.add_argument("--out", default=None, help="report output path (stdout when omitted)")
    run_p.add_argument("--format", choices=("csv", "md"), default="csv")
    run_p.add_argument("--jobs", type=int, default=1)
    run_p.add_argument("--config", default=None, help="scenario config JSON overriding the defaults")
    run_p.add_argument("--trace-dir", default=None, help="write per-episode round traces here")

    serve_p = sub.add_parser("serve-env", help="serve the RL environment protocol")
    serve_p.add_argument("--scenario", type=int, choices=(1, 2, 3), default=1)
    serve_p.add_argument("--seed", type=int, default=0)
    serve_p.add_argument("--weather", required=True)
    serve_p.add_argument("--config", default=None)
    group = serve_p.add_mutually_exclusive_group(required=True)
    group.add_argument("--listen", help="host:port to accept one agent connection on")
    group.add_argument("--stdio", action="store_true", help="speak the protocol on stdin/stdout")

    validate_p = sub.add_parser("validate-weather", help="check a weather CSV against the schema")
    validate_p.add_argument("file")
    return parser


def _load_config(args) -> ScenarioConfig:
    if getattr(args, "config", None):
        config = ScenarioConfig.from_json(Path(args.config).read_text())
        return dataclasses.replace(config, scenario_kind=args.scenario)
    return ScenarioConfig(scenario_kind=args.scenario, seed=getattr(args, "seed", 0))


def _parse_policies(raw: list[str]) -> tuple[str, ...]:
    names = tuple(name.strip() for item in raw for name in item.split(",") if name.strip())
    for name in names:
        if name == "protocol":
            raise ValueError("the protocol policy is served interactively; use 'greenflag serve-env'")
        if name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {name!r}; expected one of {POLICY_NAMES}")
    if not names:
        raise ValueError("at least one policy is required")
    return names


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            spec = ExperimentSpec(
                config=_load_config(args),
                policies=_parse_policies(args.policy),
                episodes=args.episodes,
                base_seed=args.seed,
                weather_path=args.weather,
                out_path=args.out,
                out_format=args.format,
                jobs=args.jobs,
                trace_dir=args.trace_dir,
            )
            rows = run_experiment(spec)
            report = emit_report(rows, spec.out_format)
            if spec.out_path:
                Path(spec.out_path).write_text(report)
            else:
                sys.stdout.write(report)
            return EXIT_OK
        if args.command == "serve-env":
            config = _load_config(args)
            records = load_weather_csv(args.weather)
            serve_protocol(config, records, listen=args.listen, stdio=args.stdio)
            return EXIT_OK
        if args.command == "validate-weather":
            records = load_weather_csv(args.file)
            print(f"{args.file}: OK ({len(records)} records)")
            return EXIT_OK
        raise ValueError(f"unknown command {args.command}")
    except (WeatherCsvError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
