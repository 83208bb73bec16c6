"""Command-line front end: run experiments from config files, write CSV and
SVG artifacts.

Exit codes: 0 success, 1 invalid config/parameters (diagnostic names the
offending key), 2 numerical failure (degenerate parameters, non-convergent
equilibria).
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np

from . import presets
from .axioms import fairness_trajectory, rate_protocol
from .compare import (
    LOSSLESS_CLASS,
    LOSSY_CLASS,
    METRICS,
    InvalidGridError,
    baseline,
    delta_metrics,
    sweep,
)
from .config import ConfigError, ExperimentConfig, load_config_with_overrides
from .equilibrium import (
    Classification,
    NotLossyError,
    UnrateableError,
    UnsupportedRankError,
    agent_equilibrium,
    check_p_step_consistency,
    flow_equilibrium,
    lossy_bounds,
)
from .expected import initial_expected_state, run_expected
from .model import (
    ConstantAlpha,
    DegenerateParameterError,
    DegenerateStateError,
    InvalidAssignmentError,
    InvalidParameterError,
    NetworkConfig,
    ProtocolParams,
    SlowStartAlpha,
)
from .stochastic import Trace, counts_to_assignment, run_stochastic
from .svg import Band, GuideLine, Series, render_chart

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_NUMERIC = 2

_CONFIG_ERRORS = (ConfigError, InvalidParameterError, InvalidAssignmentError, InvalidGridError)
_NUMERIC_ERRORS = (
    DegenerateParameterError,
    DegenerateStateError,
    NotLossyError,
    UnrateableError,
    UnsupportedRankError,
)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 (not argparse's 2) on bad flags
        print(f"error: {message}", file=sys.stderr)
        sys.exit(EXIT_CONFIG)


def _expected_trace(states, net: NetworkConfig) -> Trace:
    cap = net.capacity_per_path
    return Trace(
        t=np.array([s.t for s in states]),
        counts=np.array([s.agents for s in states]),
        flows=np.array([s.flows for s in states]),
        loss=np.array([[f > cap for f in s.flows] for s in states]),
    )


def _initial_counts(cfg: ExperimentConfig, net: NetworkConfig) -> List[float]:
    if cfg.run.counts is not None:
        return [float(c) for c in cfg.run.counts]
    assignment = cfg.run.assignment
    if isinstance(assignment, list):
        return [float(assignment.count(p)) for p in range(net.paths)]
    return [net.agents / net.paths] * net.paths


def _resolve_assignment(cfg: ExperimentConfig):
    if cfg.run.counts is not None:
        return counts_to_assignment(cfg.run.counts)
    assignment = cfg.run.assignment
    if isinstance(assignment, list):
        return list(assignment)
    return assignment


def _flow_series(trace: Trace, prefix: str, color: Optional[str] = None, width: float = 1.5):
    return [
        Series(
            label=f"{prefix} path {p}" if prefix else "",
            xs=trace.t.tolist(),
            ys=trace.flows[:, p].tolist(),
            color=color,
            width=width,
        )
        for p in range(trace.paths)
    ]


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def _write_trace(path: Path, trace: Trace) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        trace.write_csv(fh)


def cmd_simulate(cfg: ExperimentConfig, out: Path) -> None:
    net, proto = cfg.require_network(), cfg.require_protocol()
    assignment = _resolve_assignment(cfg)
    traces = []
    for i in range(cfg.run.trials):
        trace = run_stochastic(net, proto, cfg.run.horizon, cfg.run.seed.trial(i), assignment)
        traces.append(trace)
        _write_trace(out / f"trace_trial{i:03d}.csv", trace)
    counts = _initial_counts(cfg, net)
    states = run_expected(net, proto, cfg.run.horizon, initial_expected_state(net, agents=counts))
    expected_trace = _expected_trace(states, net)
    _write_trace(out / "expected.csv", expected_trace)

    sim_series = []
    for trace in traces:
        for s in _flow_series(trace, "", color="#bbbbbb", width=0.8):
            sim_series.append(s)
    exp_series = _flow_series(expected_trace, "expected")
    guides = [GuideLine(y=net.capacity_per_path, label="capacity per path")]
    eq = flow_equilibrium(net, proto)
    if eq.classification in (Classification.LOSSY, Classification.DIVERGENT_R1):
        bounds = lossy_bounds(net, proto)
        guides += [
            GuideLine(y=bounds.upper, label="peak bound", color="#aa3333"),
            GuideLine(y=bounds.lower_type1, label="trough bound (rotation kept)", color="#33aa33"),
            GuideLine(y=bounds.lower_type2, label="trough bound (rotation broken)", color="#338833"),
        ]
    chart = render_chart(
        sim_series + exp_series,
        guides=guides,
        title="Per-path flow: simulated runs (gray) vs expected dynamics",
        x_label="time step",
        y_label="flow (MSS)",
    )
    _write(out / "overlay.svg", chart)


def cmd_expected(cfg: ExperimentConfig, out: Path) -> None:
    net, proto = cfg.require_network(), cfg.require_protocol()
    counts = _initial_counts(cfg, net)
    states = run_expected(net, proto, cfg.run.horizon, initial_expected_state(net, agents=counts))
    trace = _expected_trace(states, net)
    _write_trace(out / "expected.csv", trace)

    agent_levels = agent_equilibrium(proto.m, net.agents, net.paths).levels
    agent_series = [
        Series(
            label=f"path {p}",
            xs=trace.t.tolist(),
            ys=trace.counts[:, p].tolist(),
        )
        for p in range(net.paths)
    ]
    agents_chart = render_chart(
        agent_series,
        guides=[GuideLine(y=lvl, label=f"level {lvl:.1f}") for lvl in agent_levels],
        title="Expected agents per path",
        x_label="time step",
        y_label="agents",
    )
    _write(out / "agents.svg", agents_chart)

    flow_guides = [GuideLine(y=net.capacity_per_path, label="capacity per path")]
    eq = flow_equilibrium(net, proto)
    if eq.levels is not None:
        flow_guides += [GuideLine(y=lvl, color="#999999") for lvl in eq.levels]
    flows_chart = render_chart(
        _flow_series(trace, "path"),
        guides=flow_guides,
        title="Expected flow per path",
        x_label="time step",
        y_label="flow (MSS)",
    )
    _write(out / "flows.svg", flows_chart)


def cmd_equilibrium(cfg: ExperimentConfig, out: Path) -> None:
    net, proto = cfg.require_network(), cfg.require_protocol()
    eq = flow_equilibrium(net, proto)
    agents = agent_equilibrium(proto.m, net.agents, net.paths)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "equilibrium.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "agent_level", "flow_level"])
        for p in range(net.paths):
            flow = "" if eq.levels is None else f"{eq.levels[p]:.10g}"
            writer.writerow([p, f"{agents.levels[p]:.10g}", flow])
    lines = [f"classification,{eq.classification.value}", f"q,{eq.q:.10g}"]
    if eq.classification in (Classification.LOSSY, Classification.DIVERGENT_R1):
        bounds = lossy_bounds(net, proto)
        lines += [
            f"upper_bound,{bounds.upper:.10g}",
            f"lower_bound_type1,{bounds.lower_type1:.10g}",
            f"lower_bound_type2,{bounds.lower_type2:.10g}",
        ]
    _write(out / "summary.csv", "\n".join(lines) + "\n")
    print(f"classification: {eq.classification.value}")
    if eq.classification is Classification.NON_CONVERGENT:
        raise DegenerateParameterError("flow dynamics do not converge for these parameters")


def _rating_row(net: NetworkConfig, proto: ProtocolParams, rating) -> List[str]:
    return [
        f"{proto.m:g}",
        f"{proto.r:g}",
        str(net.paths),
        proto.alpha.kind,
        f"{proto.beta:g}",
        rating.classification.value,
        f"{rating.efficiency:.10g}",
        f"{rating.loss:.10g}",
        f"{rating.convergence:.10g}",
        f"{rating.fairness:.10g}",
        f"{rating.fairness_stderr:.10g}",
    ]


def cmd_axioms(cfg: ExperimentConfig, out: Path) -> None:
    net, proto = cfg.require_network(), cfg.require_protocol()
    out.mkdir(parents=True, exist_ok=True)
    p_loss_values = cfg.fairness.p_loss_values if cfg.fairness is not None else [0.0]
    samples = cfg.fairness.samples if cfg.fairness is not None else 10_000
    horizon = cfg.fairness.horizon if cfg.fairness is not None else 500
    multi = cfg.fairness is not None
    with open(out / "rating.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        header = ["m", "r", "P", "alpha_kind", "beta", "classification",
                  "epsilon", "lambda", "gamma", "eta", "eta_stderr"]
        writer.writerow(header + ["p_loss"] if multi else header)
        rating = None
        for k, p_loss in enumerate(p_loss_values):
            rating = rate_protocol(
                net,
                proto,
                seed=cfg.run.seed.child(k),
                p_loss=p_loss,
                fairness_samples=samples,
                fairness_horizon=horizon,
            )
            row = _rating_row(net, proto, rating)
            writer.writerow(row + [f"{p_loss:g}"] if multi else row)
    if cfg.fairness is not None:
        traj_samples = min(samples, 4000)
        series = [
            Series(
                label=f"p_loss={p_loss:g}",
                xs=list(range(horizon + 1)),
                ys=fairness_trajectory(
                    proto, net.paths, p_loss, traj_samples, horizon, cfg.run.seed.child(100 + k)
                ).tolist(),
            )
            for k, p_loss in enumerate(p_loss_values)
        ]
        _write(
            out / "fairness.svg",
            render_chart(
                series,
                title="Window variance across agents over time",
                x_label="time step",
                y_label="variance",
            ),
        )
    print(
        f"classification={rating.classification.value} epsilon={rating.efficiency:.4f} "
        f"lambda={rating.loss:.4f} gamma={rating.convergence:.4f} eta={rating.fairness:.4f}"
    )


def cmd_compare(cfg: ExperimentConfig, out: Path) -> None:
    net, proto = cfg.require_network(), cfg.require_protocol()
    base = baseline(net, proto.alpha, proto.beta)
    delta = delta_metrics(net, proto, seed=cfg.run.seed)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "compare.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "baseline", "delta", "class"])
        writer.writerow(["epsilon", f"{base.efficiency:.10g}", f"{delta.delta_eps:.10g}", delta.class_label])
        writer.writerow(["lambda", f"{base.loss:.10g}", f"{delta.delta_lambda:.10g}", delta.class_label])
        writer.writerow(["gamma", f"{base.convergence:.10g}", f"{delta.delta_gamma:.10g}", delta.class_label])
        writer.writerow(["eta", f"{base.fairness:.10g}", f"{delta.delta_eta:.10g}", delta.class_label])
    print(f"class={delta.class_label} d_eps={delta.delta_eps:+.4f} d_lambda={delta.delta_lambda:+.4f}")


_METRIC_LABELS = {
    "delta_eps": "change in efficiency",
    "delta_lambda": "change in loss rate",
    "delta_gamma": "change in convergence",
    "delta_eta": "change in fairness (window variance)",
}


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> None:
    net, proto = cfg.require_network(), cfg.require_protocol()
    if cfg.sweep is None:
        raise ConfigError("missing [sweep] section")
    sw = cfg.sweep
    result = sweep(
        net,
        proto.alpha,
        proto.beta,
        sw.m_grid,
        sw.r_grid,
        seed=cfg.run.seed if sw.with_fairness else None,
        p_loss=sw.p_loss,
        fairness_samples=sw.fairness_samples,
        fairness_horizon=sw.fairness_horizon,
    )
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "r", "class", "delta_eps", "delta_lambda",
                         "delta_gamma", "delta_eta", "eta_stderr"])
        for pt in result.points:
            writer.writerow(
                [f"{pt.m:g}", f"{pt.r:g}", pt.class_label]
                + [f"{getattr(pt, k):.10g}" for k in METRICS]
                + [f"{pt.eta_stderr:.10g}"]
            )
    for metric in METRICS:
        if metric == "delta_eta" and not sw.with_fairness:
            continue
        rows = []
        bands = []
        for class_label, color in ((LOSSLESS_CLASS, "#1f77b4"), (LOSSY_CLASS, "#d62728")):
            ranges = result.ranges(metric, class_label)
            rows += [(rng.m, class_label, rng.lo, rng.hi) for rng in ranges]
            if ranges:
                bands.append(
                    Band(
                        label=class_label,
                        xs=[rng.m for rng in ranges],
                        lo=[rng.lo for rng in ranges],
                        hi=[rng.hi for rng in ranges],
                        color=color,
                    )
                )
        with open(out / f"range_{metric}.csv", "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["m", "class", "delta_min", "delta_max"])
            for m, label, lo, hi in sorted(rows):
                writer.writerow([f"{m:g}", label, f"{lo:.10g}", f"{hi:.10g}"])
        chart = render_chart(
            bands=bands,
            guides=[GuideLine(y=0.0, label="")],
            title=f"{_METRIC_LABELS[metric]} vs migration rate",
            x_label="migration rate m",
            y_label=_METRIC_LABELS[metric],
        )
        _write(out / f"band_{metric}.svg", chart)


def cmd_consistency_map(cfg: ExperimentConfig, out: Path) -> None:
    settings = cfg.consistency
    if settings is None:
        raise ConfigError("missing [consistency] section")
    alphas = {
        "constant": ConstantAlpha(1.0),
        "slow_start": SlowStartAlpha(5, 1.0),
    }
    m_values = [(k + 1) / (settings.m_points + 1) for k in range(settings.m_points)]
    r_values = [k / settings.r_points for k in range(settings.r_points)]
    out.mkdir(parents=True, exist_ok=True)
    inconsistent_points: Dict[tuple, List[tuple]] = {}
    with open(out / "consistency.csv", "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "r", "P", "alpha_kind", "consistent"])
        for paths in settings.paths:
            net = NetworkConfig(paths=paths, capacity_total=float(paths * 12_000), agents=1000)
            for kind in settings.alphas:
                alpha = alphas[kind]
                key = (paths, kind)
                inconsistent_points[key] = []
                for m in m_values:
                    for r in r_values:
                        verdict = check_p_step_consistency(
                            net, ProtocolParams(alpha, 0.7, m, r)
                        )
                        writer.writerow([f"{m:g}", f"{r:g}", paths, kind, int(verdict.consistent)])
                        if not verdict.consistent:
                            inconsistent_points[key].append((m, r))
    series = []
    for idx, ((paths, kind), pts) in enumerate(sorted(inconsistent_points.items())):
        if not pts:
            continue
        # draw the inconsistent region outline as per-m vertical extent
        by_m: Dict[float, List[float]] = {}
        for m, r in pts:
            by_m.setdefault(m, []).append(r)
        xs = sorted(by_m)
        series.append(
            Band(
                label=f"inconsistent P={paths} {kind}",
                xs=xs,
                lo=[min(by_m[m]) for m in xs],
                hi=[max(by_m[m]) for m in xs],
            )
        )
    if series:
        chart = render_chart(bands=series, title="Region inconsistent with rank rotation",
                             x_label="migration rate m", y_label="reset softness r",
                             y_min=0.0, y_max=1.0)
    else:
        chart = render_chart(
            [Series(label="no inconsistent points", xs=[0.0, 1.0], ys=[0.0, 0.0])],
            title="Region inconsistent with rank rotation",
            x_label="migration rate m",
            y_label="reset softness r",
        )
    _write(out / "consistency.svg", chart)
    total = sum(len(v) for v in inconsistent_points.values())
    print(f"inconsistent points: {total}")


_COMMANDS = {
    "simulate": cmd_simulate,
    "expected": cmd_expected,
    "equilibrium": cmd_equilibrium,
    "axioms": cmd_axioms,
    "compare": cmd_compare,
    "sweep": cmd_sweep,
    "consistency-map": cmd_consistency_map,
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mpccsim", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in _COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, help="experiment config (TOML)")
        p.add_argument("--preset", help=f"named figure recipe: {', '.join(presets.PRESETS)}")
        p.add_argument("--out", type=Path, default=Path("out"), help="output directory")
        p.add_argument("--seed", type=int, help="override the run seed")
        p.add_argument(
            "--set",
            dest="overrides",
            action="append",
            default=[],
            metavar="KEY=VALUE",
            help="override a config key (repeatable; last one wins)",
        )
    return parser


def run_cli(argv: Sequence[str]) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    try:
        if args.preset is not None and args.config is not None:
            raise ConfigError("pass either --config or --preset, not both")
        if args.preset is not None:
            command, config_path = presets.resolve(args.preset)
            if command != args.command:
                raise ConfigError(
                    f"preset '{args.preset}' belongs to command '{command}'"
                )
        elif args.config is not None:
            config_path = args.config
        else:
            raise ConfigError("one of --config or --preset is required")
        overrides = list(args.overrides)
        if args.seed is not None:
            overrides.append(f"run.seed={args.seed}")
        cfg = load_config_with_overrides(config_path, overrides)
        _COMMANDS[args.command](cfg, args.out)
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


def main() -> None:
    sys.exit(run_cli(sys.argv[1:]))


if __name__ == "__main__":
    main()
