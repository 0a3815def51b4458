"""Run configuration: JSON schema, validation, and design-file round-trips."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

from .comparators import COMPARATOR_KINDS, ComparatorSpec
from .model import BoundarySet, TrialDesign, TrialLayout


class ConfigError(ValueError):
    """A configuration file failed validation."""


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def _check_keys(block: dict, allowed: set[str], where: str) -> None:
    unknown = set(block) - allowed
    _require(not unknown, f"{where}: unknown keys {sorted(unknown)}")


@dataclass(frozen=True)
class RunConfig:
    """Validated run request: layout, targets, boundary family, execution."""

    n_arms: int
    n_stages: int
    group_size: Optional[int] = None
    alpha: float = 0.05
    beta: float = 0.10
    theta_prime: Optional[float] = None
    calibrate_pairwise_n: Optional[int] = None
    boundary_family: str = "double_triangular"
    binding: bool = True
    precision: float = 1e-4
    seed: int = 0
    size_guard: int = 40
    feasibility: str = "exact"
    comparators: tuple[ComparatorSpec, ...] = field(default_factory=tuple)
    sweep: Optional[dict[str, list]] = None

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "RunConfig":
        _require(isinstance(raw, dict), "config root must be an object")
        _check_keys(
            raw,
            {"layout", "targets", "boundary", "execution", "comparators", "sweep"},
            "config",
        )
        layout = raw.get("layout")
        _require(isinstance(layout, dict), "layout block required")
        _check_keys(layout, {"arms", "stages", "group_size"}, "layout")
        arms = layout.get("arms")
        stages = layout.get("stages")
        _require(isinstance(arms, int) and arms >= 2, "layout.arms must be an integer >= 2")
        _require(isinstance(stages, int) and stages >= 1, "layout.stages must be an integer >= 1")
        group_size = layout.get("group_size")
        _require(
            group_size is None or (isinstance(group_size, int) and group_size >= 1),
            "layout.group_size must be a positive integer",
        )

        targets = raw.get("targets", {})
        _check_keys(targets, {"alpha", "beta", "theta_prime", "calibrate"}, "targets")
        alpha = targets.get("alpha", 0.05)
        beta = targets.get("beta", 0.10)
        _require(isinstance(alpha, (int, float)) and 0 < alpha < 1, "targets.alpha out of range")
        _require(isinstance(beta, (int, float)) and 0 < beta < 1, "targets.beta out of range")
        theta = targets.get("theta_prime")
        _require(
            theta is None or (isinstance(theta, (int, float)) and theta > 0),
            "targets.theta_prime must be positive",
        )
        calibrate = targets.get("calibrate")
        cal_n = None
        if calibrate is not None:
            _check_keys(calibrate, {"pairwise_n"}, "targets.calibrate")
            cal_n = calibrate.get("pairwise_n")
            _require(
                isinstance(cal_n, int) and cal_n >= 1,
                "targets.calibrate.pairwise_n must be a positive integer",
            )
            _require(theta is None, "give targets.theta_prime or targets.calibrate, not both")

        boundary = raw.get("boundary", {})
        _check_keys(boundary, {"family", "binding"}, "boundary")
        family = boundary.get("family", "double_triangular")
        _require(
            family in ("double_triangular", "flat", "outer_only"),
            f"boundary.family {family!r} not recognized",
        )
        binding = boundary.get("binding", True)
        _require(isinstance(binding, bool), "boundary.binding must be true/false")

        execution = raw.get("execution", {})
        _check_keys(
            execution, {"precision", "seed", "parallelism", "size_guard", "feasibility"},
            "execution",
        )
        precision = execution.get("precision", 1e-4)
        _require(
            isinstance(precision, (int, float)) and 0 < precision < 0.1,
            "execution.precision out of range",
        )
        seed = execution.get("seed", 0)
        _require(isinstance(seed, int) and seed >= 0, "execution.seed must be a non-negative integer")
        size_guard = execution.get("size_guard", 40)
        _require(
            isinstance(size_guard, int) and size_guard >= 1,
            "execution.size_guard must be a positive integer",
        )
        feasibility = execution.get("feasibility", "exact")
        _require(
            feasibility in ("exact", "relaxed"),
            "execution.feasibility must be 'exact' or 'relaxed'",
        )

        comparators = raw.get("comparators", [])
        _require(isinstance(comparators, list), "comparators must be a list")
        specs = []
        for entry in comparators:
            if isinstance(entry, str):
                _require(
                    entry in COMPARATOR_KINDS, f"comparators: unknown kind {entry!r}"
                )
                specs.append(ComparatorSpec(entry))
            elif isinstance(entry, dict):
                _check_keys(
                    entry,
                    {
                        "kind",
                        "pairwise_alpha",
                        "pairwise_power",
                        "pairwise_scale",
                        "pairwise_group_size",
                    },
                    "comparators[]",
                )
                _require(
                    entry.get("kind") in COMPARATOR_KINDS,
                    f"comparators: unknown kind {entry.get('kind')!r}",
                )
                try:
                    specs.append(
                        ComparatorSpec(
                            entry["kind"],
                            entry.get("pairwise_alpha"),
                            entry.get("pairwise_power"),
                            entry.get("pairwise_scale"),
                            entry.get("pairwise_group_size"),
                        )
                    )
                except ValueError as exc:
                    raise ConfigError(f"comparators: {exc}") from exc
            else:
                raise ConfigError("comparators entries must be strings or objects")

        sweep = raw.get("sweep")
        if sweep is not None:
            _check_keys(sweep, {"arms", "stages", "alpha"}, "sweep")
            for key in ("arms", "stages", "alpha"):
                _require(
                    isinstance(sweep.get(key), list) and sweep[key],
                    f"sweep.{key} must be a non-empty list",
                )

        return cls(
            n_arms=arms,
            n_stages=stages,
            group_size=group_size,
            alpha=float(alpha),
            beta=float(beta),
            theta_prime=None if theta is None else float(theta),
            calibrate_pairwise_n=cal_n,
            boundary_family=family,
            binding=binding,
            precision=float(precision),
            seed=seed,
            size_guard=size_guard,
            feasibility=feasibility,
            comparators=tuple(specs),
            sweep=sweep,
        )


def load_config(path: str | Path) -> RunConfig:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    return RunConfig.from_dict(raw)


def design_to_dict(design: TrialDesign) -> dict[str, Any]:
    layout = design.layout
    return {
        "arms": layout.n_arms,
        "stages": layout.n_stages,
        "group_sizes": [list(g) for g in layout.group_sizes],
        "outer": list(design.boundaries.outer),
        "inner": list(design.boundaries.inner),
        "binding": design.binding,
    }


def design_from_dict(raw: dict[str, Any]) -> TrialDesign:
    _require(isinstance(raw, dict), "design block must be an object")
    _check_keys(
        raw, {"arms", "stages", "group_sizes", "outer", "inner", "binding"}, "design"
    )
    try:
        layout = TrialLayout(
            n_arms=raw["arms"],
            n_stages=raw["stages"],
            group_sizes=tuple(tuple(g) for g in raw["group_sizes"]),
        )
        boundaries = BoundarySet(
            tuple(float(u) for u in raw["outer"]),
            tuple(float(u) for u in raw["inner"]),
        )
        return TrialDesign(layout, boundaries, bool(raw["binding"]))
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"invalid design file: {exc}")


def load_design(path: str | Path) -> TrialDesign:
    try:
        raw = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"design file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"design file is not valid JSON: {exc}")
    block = raw.get("design", raw) if isinstance(raw, dict) else raw
    return design_from_dict(block)
