"""Command-line front end: simulate, pareto, and plan.

All three subcommands read one YAML config file with per-section
defaults, write their outputs into a chosen directory, and record a
manifest describing exactly what ran.  Numbers in the CSV and JSON
outputs carry nine significant digits, and every byte of output is a
pure function of the resolved config, so identical invocations produce
identical files.

Exit codes: 0 for a clean run, 1 when the safety audit (or a plan's
feasibility check) reports findings, 2 for configuration and usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

from crossflow import __version__
from crossflow.cz_planner import check_feasibility, cz_cost, solve_cz
from crossflow.geometry import Arm, IntersectionGeometry, Turn, TurnTimeFormula
from crossflow.mz_planner import (
    DEFAULT_JERK_SCALE,
    MzBoundary,
    MzVariant,
    mz_costs,
    normalization_weights,
    solve_mz_fuel,
    solve_mz_jerk,
    solve_mz_weighted,
)
from crossflow.pareto import DEFAULT_W_MAX, DEFAULT_W_MIN, default_grid, sweep
from crossflow.scheduler import earliest_mz_arrival
from crossflow.sim import SimConfig, run

SCHEMA_VERSION = 1
CONFIG_ENV_VAR = "CROSSFLOW_CONFIG"


class ConfigError(ValueError):
    """Anything wrong with the config file or its values."""


def _fmt(value: float) -> str:
    return format(float(value), ".9g")


def _json_float(value: float) -> float:
    # round-trip through the output precision so JSON matches the CSVs
    return float(_fmt(value))


_TOP_KEYS = {"geometry", "sim", "pareto", "plan"}
_GEOMETRY_KEYS = {
    "cz_length", "mz_side", "min_safe_distance", "v_min", "v_max",
    "u_min", "u_max", "mz_speed_left", "mz_speed_straight", "mz_speed_right",
    "turn_times", "formula", "left_path_length", "right_path_length",
}
_FORMULA_KEYS = {"radius_left_ft", "radius_right_ft", "side_friction", "superelevation"}
_SIM_KEYS = {
    "arrival_rate", "entry_speed_range", "arm_probabilities", "turn_probabilities",
    "arm_rates", "vehicle_count", "objective", "weight", "jerk_scale", "seed",
    "sample_step",
}
_PARETO_KEYS = {
    "turn", "entry_time", "mz_entry_speed", "mz_exit_speed",
    "grid", "grid_size", "w_min", "w_max", "jerk_scale",
}
_PLAN_KEYS = {
    "arm", "turn", "t0", "v0", "tm", "objective", "weight", "jerk_scale",
    "sample_step",
}


def _check_keys(section: Mapping[str, Any], allowed: set, path: str) -> None:
    for key in section:
        if key not in allowed:
            full = f"{path}.{key}" if path else str(key)
            raise ConfigError(f"unknown config key: {full}")


def _section(config: Mapping[str, Any], name: str, allowed: set) -> Dict[str, Any]:
    raw = config.get(name) or {}
    if not isinstance(raw, Mapping):
        raise ConfigError(f"config section {name} must be a mapping")
    _check_keys(raw, allowed, name)
    return dict(raw)


def load_config(path: Optional[str]) -> Dict[str, Any]:
    """Parse the YAML config file, or return an empty config when no path
    is given (the CROSSFLOW_CONFIG environment variable supplies the
    default path).  Unknown keys at any level are an error."""
    if path is None:
        return {}
    import yaml

    try:
        with open(path, "r") as fh:
            loaded = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc.strerror}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"config file {path} is not valid YAML: {exc}") from exc
    if loaded is None:
        return {}
    if not isinstance(loaded, Mapping):
        raise ConfigError("config file must contain a mapping of sections")
    _check_keys(loaded, _TOP_KEYS, "")
    return dict(loaded)


def _build_geometry(section: Mapping[str, Any]) -> IntersectionGeometry:
    kwargs = {k: v for k, v in section.items() if k not in ("formula", "turn_times")}
    if "turn_times" in section:
        raw = section["turn_times"]
        if raw is not None:
            if not isinstance(raw, Sequence) or len(raw) != 3:
                raise ConfigError(
                    "geometry.turn_times must be three values (left, straight, right) or null"
                )
            raw = tuple(float(x) for x in raw)
        kwargs["turn_times"] = raw
    formula = section.get("formula")
    if formula is not None:
        if not isinstance(formula, Mapping):
            raise ConfigError("geometry.formula must be a mapping")
        _check_keys(formula, _FORMULA_KEYS, "geometry.formula")
        try:
            kwargs["turn_time_formula"] = TurnTimeFormula(**formula)
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"geometry.formula: {exc}") from exc
    try:
        return IntersectionGeometry(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"geometry: {exc}") from exc


def _geometry_dict(g: IntersectionGeometry) -> Dict[str, Any]:
    formula = None
    if g.turn_time_formula is not None:
        f = g.turn_time_formula
        formula = {
            "radius_left_ft": f.radius_left_ft,
            "radius_right_ft": f.radius_right_ft,
            "side_friction": f.side_friction,
            "superelevation": f.superelevation,
        }
    return {
        "cz_length": g.cz_length,
        "mz_side": g.mz_side,
        "min_safe_distance": g.min_safe_distance,
        "v_min": g.v_min,
        "v_max": g.v_max,
        "u_min": g.u_min,
        "u_max": g.u_max,
        "mz_speed_left": g.mz_speed_left,
        "mz_speed_straight": g.mz_speed_straight,
        "mz_speed_right": g.mz_speed_right,
        "turn_times": list(g.turn_times) if g.turn_times is not None else None,
        "formula": formula,
        "left_path_length": g.left_path_length,
        "right_path_length": g.right_path_length,
    }


def _parse_objective(name: Any, path: str) -> MzVariant:
    try:
        return MzVariant(name)
    except ValueError:
        valid = ", ".join(v.value for v in MzVariant)
        raise ConfigError(f"{path} must be one of: {valid} (got {name!r})") from None


def _parse_turn(name: Any, path: str) -> Turn:
    try:
        return Turn(name)
    except ValueError:
        valid = ", ".join(t.value for t in Turn)
        raise ConfigError(f"{path} must be one of: {valid} (got {name!r})") from None


def _parse_arm(name: Any, path: str) -> Arm:
    try:
        return Arm(name)
    except ValueError:
        valid = ", ".join(a.value for a in Arm)
        raise ConfigError(f"{path} must be one of: {valid} (got {name!r})") from None


def _build_sim_config(
    config: Mapping[str, Any], seed_override: Optional[int]
) -> Tuple[SimConfig, Dict[str, Any]]:
    geometry = _build_geometry(_section(config, "geometry", _GEOMETRY_KEYS))
    section = _section(config, "sim", _SIM_KEYS)
    kwargs: Dict[str, Any] = {"geometry": geometry}
    for key in ("arrival_rate", "vehicle_count", "weight", "jerk_scale", "seed", "sample_step"):
        if key in section:
            kwargs[key] = section[key]
    for key, size in (
        ("entry_speed_range", 2),
        ("arm_probabilities", 4),
        ("turn_probabilities", 3),
        ("arm_rates", 4),
    ):
        if key in section and section[key] is not None:
            raw = section[key]
            if not isinstance(raw, Sequence) or len(raw) != size:
                raise ConfigError(f"sim.{key} must be a list of {size} numbers")
            kwargs[key] = tuple(float(x) for x in raw)
    if "objective" in section:
        kwargs["objective"] = _parse_objective(section["objective"], "sim.objective")
    if seed_override is not None:
        kwargs["seed"] = seed_override
    try:
        sim_config = SimConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"sim: {exc}") from exc
    resolved = {
        "geometry": _geometry_dict(geometry),
        "sim": {
            "arrival_rate": sim_config.arrival_rate,
            "entry_speed_range": list(sim_config.entry_speed_range),
            "arm_probabilities": list(sim_config.arm_probabilities),
            "turn_probabilities": list(sim_config.turn_probabilities),
            "arm_rates": list(sim_config.arm_rates) if sim_config.arm_rates else None,
            "vehicle_count": sim_config.vehicle_count,
            "objective": sim_config.objective.value,
            "weight": sim_config.weight,
            "jerk_scale": sim_config.jerk_scale,
            "seed": sim_config.seed,
            "sample_step": sim_config.sample_step,
        },
    }
    return sim_config, resolved


def _config_digest(resolved: Mapping[str, Any]) -> str:
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _write_manifest(
    out_dir: str,
    command: str,
    resolved: Mapping[str, Any],
    seed: Optional[int],
    outputs: List[str],
) -> None:
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config_digest": _config_digest(resolved),
        "seed": seed,
        "tool_version": __version__,
        "outputs": sorted(outputs),
    }
    _write_json(os.path.join(out_dir, "manifest.json"), manifest)


def _write_json(path: str, payload: Mapping[str, Any]) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence[str]]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def cmd_simulate(config: Mapping[str, Any], out_dir: str, seed_override: Optional[int]) -> int:
    sim_config, resolved = _build_sim_config(config, seed_override)
    result = run(sim_config)
    os.makedirs(out_dir, exist_ok=True)

    trajectory_rows = [
        [_fmt(row.t), str(row.vehicle_id), row.arm, row.turn, row.zone,
         _fmt(row.p), _fmt(row.v), _fmt(row.u), _fmt(row.j)]
        for row in result.samples
    ]
    _write_csv(
        os.path.join(out_dir, "trajectories.csv"),
        ["t", "id", "arm", "turn", "zone", "p", "v", "u", "j"],
        trajectory_rows,
    )

    schedule_rows = []
    for rec in result.vehicles:
        s = rec.schedule
        schedule_rows.append([
            str(s.vehicle_id), _fmt(s.t0), _fmt(s.tm), _fmt(s.tf),
            _fmt(s.vm), _fmt(s.vf), s.binding_case,
            "" if s.same_exit_pred is None else str(s.same_exit_pred),
            "" if s.same_entry_pred is None else str(s.same_entry_pred),
            "" if s.lateral_pred is None else str(s.lateral_pred),
            "" if s.fifo_pred is None else str(s.fifo_pred),
        ])
    _write_csv(
        os.path.join(out_dir, "schedule.csv"),
        ["id", "t0", "tm", "tf", "vm", "vf", "binding_case", "e", "s", "l", "o"],
        schedule_rows,
    )

    audit_payload = {
        "ok": result.audit.ok,
        "findings": [
            {
                "kind": f.kind,
                "vehicle_id": f.vehicle_id,
                "other_id": f.other_id,
                "time": _json_float(f.time),
                "value": _json_float(f.value),
                "bound": _json_float(f.bound),
            }
            for f in result.audit.findings
        ],
        "binding_histogram": result.binding_histogram,
    }
    _write_json(os.path.join(out_dir, "audit.json"), audit_payload)

    outputs = ["trajectories.csv", "schedule.csv", "audit.json", "manifest.json"]
    _write_manifest(out_dir, "simulate", resolved, sim_config.seed, outputs)
    return 0 if result.audit.ok else 1


def cmd_pareto(config: Mapping[str, Any], out_dir: str) -> int:
    geometry = _build_geometry(_section(config, "geometry", _GEOMETRY_KEYS))
    section = _section(config, "pareto", _PARETO_KEYS)
    turn = _parse_turn(section.get("turn", "left"), "pareto.turn")
    entry_time = float(section.get("entry_time", 0.0))
    vm = section.get("mz_entry_speed")
    vm = geometry.mz_speed(turn) if vm is None else float(vm)
    vf = section.get("mz_exit_speed")
    vf = geometry.mz_speed(turn) if vf is None else float(vf)
    jerk_scale = float(section.get("jerk_scale", DEFAULT_JERK_SCALE))
    grid_size = int(section.get("grid_size", 50))
    w_min = float(section.get("w_min", DEFAULT_W_MIN))
    w_max = float(section.get("w_max", DEFAULT_W_MAX))
    explicit_grid = section.get("grid")

    try:
        boundary = MzBoundary(
            tm=entry_time,
            tf=entry_time + geometry.transit_time(turn),
            vm=vm,
            vf=vf,
            p_start=geometry.cz_length,
            p_end=geometry.cz_length + geometry.path_length(turn),
        )
        if explicit_grid is not None:
            grid = tuple(float(w) for w in explicit_grid)
        else:
            grid = default_grid(grid_size, w_min, w_max)
        q1, q2 = normalization_weights(geometry.u_max, jerk_scale)
        result = sweep(boundary, grid, q1=q1, q2=q2)
    except ValueError as exc:
        raise ConfigError(f"pareto: {exc}") from exc

    os.makedirs(out_dir, exist_ok=True)
    frontier_ws = {point.w for point in result.frontier}
    rows = [
        [_fmt(p.w), _fmt(p.fuel), _fmt(p.discomfort),
         "true" if p.w in frontier_ws else "false"]
        for p in result.points
    ]
    _write_csv(
        os.path.join(out_dir, "pareto.csv"),
        ["w", "fuel", "discomfort", "on_frontier"],
        rows,
    )

    resolved = {
        "geometry": _geometry_dict(geometry),
        "pareto": {
            "turn": turn.value,
            "entry_time": entry_time,
            "mz_entry_speed": vm,
            "mz_exit_speed": vf,
            "grid": [float(w) for w in grid],
            "jerk_scale": jerk_scale,
        },
    }
    _write_manifest(out_dir, "pareto", resolved, None, ["pareto.csv", "manifest.json"])
    return 0


def cmd_plan(config: Mapping[str, Any], out_dir: str) -> int:
    geometry = _build_geometry(_section(config, "geometry", _GEOMETRY_KEYS))
    section = _section(config, "plan", _PLAN_KEYS)
    arm = _parse_arm(section.get("arm", "W"), "plan.arm")
    turn = _parse_turn(section.get("turn", "straight"), "plan.turn")
    t0 = float(section.get("t0", 0.0))
    v0 = float(section.get("v0", 10.0))
    requested_tm = section.get("tm")
    objective = _parse_objective(section.get("objective", "jerk_only"), "plan.objective")
    weight = section.get("weight")
    jerk_scale = float(section.get("jerk_scale", DEFAULT_JERK_SCALE))
    sample_step = float(section.get("sample_step", 0.1))
    if sample_step <= 0.0:
        raise ConfigError("plan.sample_step must be positive")
    if objective is MzVariant.WEIGHTED and (weight is None or not 0.0 < weight < 1.0):
        raise ConfigError("plan.weight must be strictly inside (0, 1) for the weighted objective")

    try:
        bound = earliest_mz_arrival(t0, v0, geometry)
    except ValueError as exc:
        raise ConfigError(f"plan: {exc}") from exc
    if requested_tm is None:
        tm = bound
    else:
        tm = float(requested_tm)
        if tm < bound:
            print(
                f"warning: requested merge time {_fmt(tm)} is earlier than the "
                f"feasible minimum {_fmt(bound)}; planning at the minimum",
                file=sys.stderr,
            )
            tm = bound

    vm = geometry.mz_speed(turn)
    transit = geometry.transit_time(turn)
    cz = solve_cz(t0, v0, tm, vm, geometry.cz_length)
    boundary = MzBoundary(
        tm=tm,
        tf=tm + transit,
        vm=vm,
        vf=vm,
        p_start=geometry.cz_length,
        p_end=geometry.cz_length + geometry.path_length(turn),
        u_start=float(cz.control(tm)),
    )
    if objective is MzVariant.FUEL_ONLY:
        mz = solve_mz_fuel(boundary)
    elif objective is MzVariant.JERK_ONLY:
        mz = solve_mz_jerk(boundary)
    else:
        q1, q2 = normalization_weights(geometry.u_max, jerk_scale)
        mz = solve_mz_weighted(boundary, weight, q1, q2)
    report = check_feasibility(cz, geometry)
    costs = mz_costs(mz)

    print(f"movement: {arm.value}:{turn.value}")
    print(f"entry: t0={_fmt(t0)} v0={_fmt(v0)}")
    print(f"merge window: tm={_fmt(tm)} tf={_fmt(tm + transit)} vm={_fmt(vm)}")
    print(
        "approach coefficients: "
        f"a={_fmt(cz.a)} b={_fmt(cz.b)} c={_fmt(cz.c)} d={_fmt(cz.d)}"
    )
    coeff_text = " ".join(
        f"{name}={_fmt(value)}"
        for name, value in zip("abcdef", mz.coefficients)
    )
    print(f"merge coefficients ({mz.variant.value}): {coeff_text}")
    print(f"approach effort: {_fmt(cz_cost(cz))}")
    print(f"merge fuel: {_fmt(costs.fuel)}")
    print(f"merge discomfort: {_fmt(costs.discomfort)}")
    if costs.weighted is not None:
        print(f"merge weighted cost: {_fmt(costs.weighted)}")
    if report.ok:
        print("feasibility: ok")
    else:
        for violation in report.violations:
            print(
                f"feasibility violation: {violation.kind} at t={_fmt(violation.time)} "
                f"value={_fmt(violation.value)} bound={_fmt(violation.bound)}"
            )

    os.makedirs(out_dir, exist_ok=True)
    rows = []
    tf = tm + transit
    steps = int(round((tf - t0) / sample_step))
    for k in range(steps + 1):
        t = min(t0 + k * sample_step, tf)
        if t < tm:
            zone, src = "cz", cz
        else:
            zone, src = "mz", mz
        rows.append([
            _fmt(t), zone, _fmt(float(src.position(t))), _fmt(float(src.speed(t))),
            _fmt(float(src.control(t))), _fmt(float(src.jerk(t))),
        ])
    _write_csv(os.path.join(out_dir, "plan.csv"), ["t", "zone", "p", "v", "u", "j"], rows)

    resolved = {
        "geometry": _geometry_dict(geometry),
        "plan": {
            "arm": arm.value,
            "turn": turn.value,
            "t0": t0,
            "v0": v0,
            "tm": None if requested_tm is None else float(requested_tm),
            "planned_tm": tm,
            "objective": objective.value,
            "weight": weight,
            "jerk_scale": jerk_scale,
            "sample_step": sample_step,
        },
    }
    _write_manifest(out_dir, "plan", resolved, None, ["plan.csv", "manifest.json"])
    return 0 if report.ok else 1


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="crossflow",
        description="Plan and simulate coordinated intersection crossings.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    descriptions = {
        "simulate": "run a randomized scenario and audit it",
        "pareto": "sweep the fuel/comfort tradeoff for one merge window",
        "plan": "plan a single vehicle's crossing",
    }
    for name, description in descriptions.items():
        sub = subparsers.add_parser(name, help=description)
        sub.add_argument(
            "--config",
            default=None,
            help=f"YAML config file (default: ${CONFIG_ENV_VAR} if set)",
        )
        sub.add_argument(
            "--out", default=".", help="directory for output files (default: current)"
        )
        if name == "simulate":
            sub.add_argument(
                "--seed", type=int, default=None, help="override the configured seed"
            )
    args = parser.parse_args(argv)

    config_path = args.config if args.config is not None else os.environ.get(CONFIG_ENV_VAR)
    try:
        config = load_config(config_path)
        if args.command == "simulate":
            return cmd_simulate(config, args.out, args.seed)
        if args.command == "pareto":
            return cmd_pareto(config, args.out)
        return cmd_plan(config, args.out)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
