"""Command-line front end: design, evaluate, strong-check, simulate, compare,
plot-data.

JSON in, JSON/fixed-width-text/CSV out.  Exit codes: 0 success, 2 bad
configuration, 3 inconclusive certificate, 4 compute failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Optional

import numpy as np

from . import characteristics as ch
from .characteristics import OperatingReport, StrongControlCertificate
from .comparators import (
    comparator_report,
    evaluate_two_arm_block,
    pairwise_targets,
    solve_two_arm_block,
)
from .config import (
    ConfigError,
    RunConfig,
    design_to_dict,
    load_config,
    load_design,
)
from .enumeration import build_all_outcomes
from .model import EffectConfiguration, TrialDesign, TrialLayout
from .quadrature import QuadratureError
from .simulator import simulate
from .solver import (
    BoundaryFamily,
    assemble_design,
    calibrate_theta_prime,
    design_trial,
    solve_boundary_scale,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_COMPUTE = 4


def _theta(config: RunConfig) -> float:
    if config.theta_prime is not None:
        return config.theta_prime
    if config.calibrate_pairwise_n is not None:
        return calibrate_theta_prime(
            config.calibrate_pairwise_n,
            config.n_stages,
            config.alpha,
            config.beta,
            config.binding,
            BoundaryFamily(config.boundary_family),
            seed=config.seed,
        )
    raise ConfigError("targets.theta_prime or targets.calibrate required")


def _report_dict(report: OperatingReport) -> dict[str, Any]:
    out: dict[str, Any] = {
        "fwer": {"value": report.fwer.value, "std_error": report.fwer.std_error},
        "max_n": report.max_n,
    }
    if report.power_lfc is not None:
        out["power_lfc"] = {
            "value": report.power_lfc.value,
            "std_error": report.power_lfc.std_error,
        }
    if report.group_size is not None:
        out["group_size"] = report.group_size
    if report.boundaries is not None:
        out["outer"] = list(report.boundaries.outer)
        out["inner"] = list(report.boundaries.inner)
    out["expected_n"] = {
        k: {"value": v, "std_error": s} for k, (v, s) in report.expected_n.items()
    }
    if report.breakdown:
        out["breakdown"] = {
            label: {f"{kind}_{count}": [v, s] for (kind, count), (v, s) in cells.items()}
            for label, cells in report.breakdown.items()
        }
    if report.strong_control is not None:
        out["strong_control"] = _certificate_dict(report.strong_control)
    if report.notes:
        out["notes"] = dict(report.notes)
    return out


def _certificate_dict(cert: StrongControlCertificate) -> dict[str, Any]:
    return {
        "global_fwer": {
            "value": cert.global_fwer.value,
            "std_error": cert.global_fwer.std_error,
        },
        "verdict": cert.verdict,
        "partitions": [
            {
                "blocks": [sorted(b) for b in part.blocks],
                "probability": est.value,
                "std_error": est.std_error,
            }
            for part, est in sorted(
                cert.partition_probs.items(),
                key=lambda kv: sorted(sorted(b) for b in kv[0].blocks),
            )
        ],
    }


def _write_json(path: Path, payload: Any) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _fmt(x: float, nd: int = 3) -> str:
    return f"{x:.{nd}f}"


def _report_row(name: str, report: OperatingReport) -> str:
    u = "/".join(_fmt(x) for x in report.boundaries.outer) if report.boundaries else "-"
    us = "/".join(_fmt(x) for x in report.boundaries.inner) if report.boundaries else "-"
    power = _fmt(report.power_lfc.value) if report.power_lfc else "-"
    ens = " ".join(
        f"{_fmt(v, 1):>7}" for v, _ in report.expected_n.values()
    )
    return (
        f"{name:<28} {u:>20} {us:>20} {_fmt(report.fwer.value):>6} {power:>6} "
        f"{report.group_size or '-':>4} {report.max_n:>6}  {ens}"
    )


def _table_header(n_arms: int) -> str:
    ens = " ".join(f"{'E(N|T' + str(i) + ')':>7}" for i in range(n_arms))
    return (
        f"{'design':<28} {'u':>20} {'u*':>20} {'FWER':>6} {'power':>6} "
        f"{'n':>4} {'max N':>6}  {ens}"
    )


def _evaluate(
    design: TrialDesign,
    theta: float,
    config: RunConfig,
    with_breakdown: bool = False,
    with_certificate: bool = False,
) -> OperatingReport:
    report = ch.evaluate_design(
        design,
        theta,
        target_se=config.precision,
        seed=config.seed,
        feasibility=config.feasibility,  # type: ignore[arg-type]
        with_breakdown=with_breakdown,
        with_certificate=with_certificate,
    )
    if not design.binding:
        honored = ch.fwer_binding_global(design, config.precision, config.seed)
        report.notes["fwer_inner_rules_honored"] = honored.value
    return report


def cmd_design(config: RunConfig, out_dir: Path) -> int:
    theta = _theta(config)
    family = BoundaryFamily(config.boundary_family)
    if config.group_size is not None:
        layout = TrialLayout.equal_allocation(
            config.n_arms, config.n_stages, config.group_size
        )
        scale = solve_boundary_scale(
            layout, family, config.alpha, config.binding, seed=config.seed
        )
        design = assemble_design(layout, family, scale, config.binding)
    else:
        design = design_trial(
            config.n_arms,
            config.n_stages,
            config.alpha,
            config.beta,
            theta,
            config.binding,
            family,
            seed=config.seed,
        )
    report = _evaluate(design, theta, config)
    payload = {
        "design": design_to_dict(design),
        "report": _report_dict(report),
        "meta": {"theta_prime": theta, "alpha": config.alpha, "beta": config.beta},
    }
    _write_json(out_dir / "design.json", payload)
    lines = [
        _table_header(config.n_arms),
        _report_row("mamsap" + (" (binding)" if design.binding else " (non-binding)"), report),
    ]
    (out_dir / "design.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_evaluate(config: RunConfig, design_path: Path, out_dir: Path) -> int:
    design = load_design(design_path)
    theta = _theta(config)
    report = _evaluate(design, theta, config, with_breakdown=True)
    payload = {
        "design": design_to_dict(design),
        "report": _report_dict(report),
        "meta": {"theta_prime": theta},
    }
    _write_json(out_dir / "evaluation.json", payload)
    lines = [_table_header(design.layout.n_arms), _report_row("evaluated", report)]
    lines.append("")
    lines.append("terminal outcome breakdown (rows: effect pattern)")
    for label, cells in report.breakdown.items():
        cell_txt = "  ".join(
            f"{kind[0]}{count}={_fmt(v)}" for (kind, count), (v, _) in cells.items()
        )
        lines.append(f"  {label:<10} {cell_txt}")
    (out_dir / "evaluation.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_strong_check(
    config: RunConfig, design_path: Optional[Path], out_dir: Path
) -> int:
    if design_path is not None:
        design = load_design(design_path)
    else:
        theta = _theta(config)
        design = design_trial(
            config.n_arms, config.n_stages, config.alpha, config.beta, theta,
            config.binding, BoundaryFamily(config.boundary_family), seed=config.seed,
        )
    cert = ch.strong_control_certificate(
        design, config.precision, config.seed
    )
    _write_json(out_dir / "strong_check.json", _certificate_dict(cert))
    print(f"global-null FWER {cert.global_fwer.value:.4f}; verdict {cert.verdict}")
    for part, est in sorted(
        cert.partition_probs.items(),
        key=lambda kv: sorted(sorted(b) for b in kv[0].blocks),
    ):
        blocks = "|".join("".join(str(a) for a in sorted(b)) for b in part.blocks)
        print(f"  partition {blocks:<12} P(no rejection) {est.value:.4f} +- {est.std_error:.1e}")

    if config.sweep is not None:
        rows = ["arms,stages,alpha,scale,worst_fwer,verdict"]
        for arms in config.sweep["arms"]:
            for stages in config.sweep["stages"]:
                for alpha in config.sweep["alpha"]:
                    layout = TrialLayout.equal_allocation(arms, stages, 10)
                    family = BoundaryFamily(config.boundary_family)
                    scale = solve_boundary_scale(
                        layout, family, alpha, binding=True, seed=config.seed
                    )
                    swept = assemble_design(layout, family, scale, binding=True)
                    c = ch.strong_control_certificate(
                        swept, config.precision, config.seed
                    )
                    rows.append(
                        f"{arms},{stages},{alpha},{scale:.4f},"
                        f"{c.worst_fwer():.5f},{c.verdict}"
                    )
                    print(rows[-1])
        (out_dir / "strong_sweep.csv").write_text("\n".join(rows) + "\n")
        if any(r.endswith("INCONCLUSIVE") for r in rows[1:]):
            return EXIT_INCONCLUSIVE

    return EXIT_INCONCLUSIVE if cert.verdict == "INCONCLUSIVE" else EXIT_OK


def cmd_simulate(
    config: RunConfig, design_path: Path, replications: int, out_dir: Path
) -> int:
    design = load_design(design_path)
    theta = _theta(config)
    report = _evaluate(design, theta, config)
    lines = ["quantity            analytic    simulated   z"]
    results: dict[str, Any] = {}

    def agree(name: str, a: float, a_se: float, s: float, s_se: float) -> None:
        z = (a - s) / max(math.hypot(a_se, s_se), 1e-12)
        results[name] = {
            "analytic": a, "analytic_se": a_se, "simulated": s,
            "simulated_se": s_se, "z": z,
        }
        lines.append(f"{name:<18} {a:>10.4f} {s:>12.4f} {z:>5.1f}")

    null_sim = simulate(
        design, EffectConfiguration.global_null(design.layout.n_arms),
        replications, config.seed,
    )
    fwer = report.fwer
    if not design.binding:
        # the simulator honors the similarity rules; compare like with like
        honored = report.notes["fwer_inner_rules_honored"]
        agree("fwer", honored, report.fwer.std_error, null_sim.error_rate,
              null_sim.error_rate_se)
    else:
        agree("fwer", fwer.value, fwer.std_error, null_sim.error_rate,
              null_sim.error_rate_se)
    agree(
        "e_n_theta_0",
        *report.expected_n["theta_0"],
        null_sim.mean_sample_size,
        null_sim.se_sample_size,
    )
    lfc_sim = simulate(
        design,
        EffectConfiguration.lfc(design.layout.n_arms, 1, theta),
        replications,
        config.seed + 1,
    )
    p = lfc_sim.sole_survivor_probability(1)
    agree(
        "power_lfc",
        report.power_lfc.value,
        report.power_lfc.std_error,
        p,
        math.sqrt(max(p * (1 - p), 1e-12) / replications),
    )
    agree(
        "e_n_theta_1",
        *report.expected_n["theta_1"],
        lfc_sim.mean_sample_size,
        lfc_sim.se_sample_size,
    )
    payload = {
        "replications": replications,
        "seed": config.seed,
        "agreement": results,
        "null_survivors": {
            "".join(map(str, sorted(k))): v for k, v in null_sim.survivor_counts.items()
        },
        "null_stop_stages": null_sim.stop_stage_counts,
    }
    _write_json(out_dir / "simulation.json", payload)
    print("\n".join(lines))
    return EXIT_OK


def cmd_compare(config: RunConfig, out_dir: Path) -> int:
    theta = _theta(config)
    family = BoundaryFamily(config.boundary_family)
    design = design_trial(
        config.n_arms, config.n_stages, config.alpha, config.beta, theta,
        config.binding, family, seed=config.seed,
    )
    main = _evaluate(design, theta, config)
    name = "mamsap" + (" (binding)" if config.binding else " (non-binding)")
    lines = [_table_header(config.n_arms), _report_row(name, main)]
    rows: dict[str, Any] = {name: _report_dict(main)}

    blocks: dict[tuple[float, float], Any] = {}
    for spec in config.comparators:
        try:
            if spec.pairwise_scale is not None:
                key = ("pinned", spec.pairwise_scale, spec.pairwise_group_size)
            else:
                key = pairwise_targets(
                    spec.kind, config.n_arms, config.alpha, config.beta
                )
                if spec.pairwise_alpha is not None:
                    key = (spec.pairwise_alpha, key[1])
                if spec.pairwise_power is not None:
                    key = (key[0], spec.pairwise_power)
            if key not in blocks:
                if spec.pairwise_scale is not None:
                    layout = TrialLayout.equal_allocation(
                        2, config.n_stages, spec.pairwise_group_size
                    )
                    pinned = assemble_design(
                        layout, family, spec.pairwise_scale, config.binding
                    )
                    blocks[key] = evaluate_two_arm_block(pinned, theta, config.seed)
                else:
                    blocks[key] = solve_two_arm_block(
                        config.n_stages, key[0], key[1], theta, config.binding,
                        family, seed=config.seed,
                    )
            report = comparator_report(
                spec, config.n_arms, config.n_stages, config.alpha, config.beta,
                theta, config.binding, family, config.precision,
                seed=config.seed, block=blocks[key],
            )
            lines.append(_report_row(spec.kind, report))
            rows[spec.kind] = _report_dict(report)
        except (ValueError, QuadratureError) as exc:
            lines.append(f"{spec.kind:<28} FAILED: {exc}")
            rows[spec.kind] = {"error": str(exc)}
    _write_json(out_dir / "comparison.json", rows)
    (out_dir / "comparison.txt").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


def cmd_plot_data(design_path: Path, out_dir: Path) -> int:
    design = load_design(design_path)
    rows = ["stage,information_fraction,u,minus_u,u_star,minus_u_star"]
    fracs = design.layout.information_fractions
    for j in range(design.layout.n_stages):
        u, us = design.boundaries.outer[j], design.boundaries.inner[j]
        rows.append(f"{j + 1},{fracs[j]:.6f},{u:.6f},{-u:.6f},{us:.6f},{-us:.6f}")
    (out_dir / "boundaries.csv").write_text("\n".join(rows) + "\n")
    print("\n".join(rows))
    return EXIT_OK


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mamsap",
        description="Design and evaluation of multi-arm multi-stage all-pairwise trials.",
    )
    parser.add_argument(
        "command",
        choices=["design", "evaluate", "strong-check", "simulate", "compare", "plot-data"],
    )
    parser.add_argument("--config", help="JSON run configuration")
    parser.add_argument("--design", help="design.json produced by a previous run")
    parser.add_argument("--seed", type=int, help="override execution.seed")
    parser.add_argument("--precision", type=float, help="override execution.precision")
    parser.add_argument("--reps", type=int, default=100_000, help="simulation replications")
    parser.add_argument("--out", default=".", help="output directory")
    args = parser.parse_args(argv)

    out_dir = Path(args.out)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        if args.command == "plot-data":
            if not args.design:
                raise ConfigError("plot-data requires --design")
            return cmd_plot_data(Path(args.design), out_dir)
        if not args.config:
            raise ConfigError(f"{args.command} requires --config")
        config = load_config(args.config)
        if args.seed is not None:
            config = RunConfig(**{**config.__dict__, "seed": args.seed})
        if args.precision is not None:
            config = RunConfig(**{**config.__dict__, "precision": args.precision})

        if args.command == "design":
            return cmd_design(config, out_dir)
        if args.command == "evaluate":
            if not args.design:
                raise ConfigError("evaluate requires --design")
            return cmd_evaluate(config, Path(args.design), out_dir)
        if args.command == "strong-check":
            design = Path(args.design) if args.design else None
            return cmd_strong_check(config, design, out_dir)
        if args.command == "simulate":
            if not args.design:
                raise ConfigError("simulate requires --design")
            return cmd_simulate(config, Path(args.design), args.reps, out_dir)
        if args.command == "compare":
            return cmd_compare(config, out_dir)
        raise AssertionError("unreachable")
    except ConfigError as exc:
        print(json.dumps({"error": "config", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(json.dumps({"error": "compute", "message": str(exc)}), file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
