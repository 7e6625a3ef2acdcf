"""Event-driven simulation of randomized arrivals at one intersection.

Vehicles arrive on the four approach arms as a Poisson stream, get
scheduled the moment they enter the control zone (first-in-first-out by
actual entry), and follow their closed-form trajectories through both
zones.  An upstream entry gate holds a vehicle at the control-zone
boundary until its planned approach keeps the minimum safe distance to
the vehicle ahead on the same lane for the whole stretch where both are
inside the control zone; beyond that gate, safety is entirely the
scheduler's job.  After the run, an auditor re-derives the safety story
from the sampled state table alone and reports every violation it finds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Dict, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from crossflow.cz_planner import (
    CzTrajectory,
    FeasibilityReport,
    check_feasibility,
    solve_cz,
)
from crossflow.geometry import (
    Arm,
    ConflictClass,
    IntersectionGeometry,
    Movement,
    Turn,
    classify,
)
from crossflow.mz_planner import (
    DEFAULT_JERK_SCALE,
    MzTrajectory,
    MzVariant,
    boundary_from_schedule,
    normalization_weights,
    solve_mz_fuel,
    solve_mz_jerk,
    solve_mz_weighted,
)
from crossflow.scheduler import Schedule, VehicleSpec
from crossflow.scheduler import schedule as schedule_vehicle

_ARM_ORDER = (Arm.NORTH, Arm.EAST, Arm.SOUTH, Arm.WEST)
_TURN_ORDER = (Turn.LEFT, Turn.STRAIGHT, Turn.RIGHT)

ZONE_CZ = "cz"
ZONE_MZ = "mz"
ZONE_OUT = "out"

# entry-gate search: forward scan step and commit-time resolution
_GATE_SCAN_STEP = 0.25
_GATE_RESOLUTION = 1e-6


@dataclass(frozen=True)
class SimConfig:
    """One reproducible scenario: geometry, traffic mix, objective, seed."""

    geometry: IntersectionGeometry = IntersectionGeometry()
    arrival_rate: float = 1.0
    entry_speed_range: Tuple[float, float] = (10.0, 12.0)
    # (N, E, S, W) and (left, straight, right); uniform unless stated
    arm_probabilities: Tuple[float, float, float, float] = (0.25, 0.25, 0.25, 0.25)
    turn_probabilities: Tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)
    # optional independent Poisson rate per arm (N, E, S, W); overrides
    # arrival_rate plus arm_probabilities when given
    arm_rates: Optional[Tuple[float, float, float, float]] = None
    vehicle_count: int = 30
    objective: MzVariant = MzVariant.JERK_ONLY
    weight: Optional[float] = None
    jerk_scale: float = DEFAULT_JERK_SCALE
    seed: int = 0
    sample_step: float = 0.1

    def __post_init__(self) -> None:
        if self.arm_rates is None:
            if self.arrival_rate <= 0.0:
                raise ValueError(f"arrival_rate must be positive, got {self.arrival_rate}")
        else:
            if len(self.arm_rates) != 4 or any(r <= 0.0 for r in self.arm_rates):
                raise ValueError(f"arm_rates must be four positive values, got {self.arm_rates}")
        lo, hi = self.entry_speed_range
        g = self.geometry
        if not (g.v_min <= lo <= hi <= g.v_max):
            raise ValueError(
                f"entry_speed_range [{lo}, {hi}] must sit inside [{g.v_min}, {g.v_max}]"
            )
        for name, probs, count in (
            ("arm_probabilities", self.arm_probabilities, 4),
            ("turn_probabilities", self.turn_probabilities, 3),
        ):
            if len(probs) != count or any(p < 0.0 for p in probs):
                raise ValueError(f"{name} must be {count} nonnegative values, got {probs}")
            if abs(sum(probs) - 1.0) > 1e-6:
                raise ValueError(f"{name} must sum to 1, got {sum(probs)}")
        if self.vehicle_count < 1:
            raise ValueError(f"vehicle_count must be at least 1, got {self.vehicle_count}")
        if self.objective is MzVariant.WEIGHTED:
            if self.weight is None or not 0.0 < self.weight < 1.0:
                raise ValueError("weighted objective needs a weight strictly inside (0, 1)")
        if self.jerk_scale <= 0.0:
            raise ValueError(f"jerk_scale must be positive, got {self.jerk_scale}")
        if self.sample_step <= 0.0:
            raise ValueError(f"sample_step must be positive, got {self.sample_step}")


def generate_arrivals(cfg: SimConfig) -> List[VehicleSpec]:
    """Draw the arrival sequence for a scenario, deterministically per seed.

    Inter-arrival gaps are exponential (aggregate rate, or per arm when
    arm_rates is set), entry speeds uniform over the configured range, and
    arm/turn choices independent draws.  Ids count up in arrival order;
    exactly coincident timestamps are ordered by an auxiliary random draw.
    """
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    n = cfg.vehicle_count
    if cfg.arm_rates is None:
        times = np.cumsum(rng.exponential(1.0 / cfg.arrival_rate, size=n))
        tiebreak = rng.random(n)
        arm_idx = rng.choice(4, size=n, p=np.asarray(cfg.arm_probabilities, dtype=float))
        arms = [_ARM_ORDER[k] for k in arm_idx]
    else:
        streams = [
            np.cumsum(rng.exponential(1.0 / rate, size=n)) for rate in cfg.arm_rates
        ]
        tiebreak_all = rng.random(4 * n)
        merged = sorted(
            (t, tiebreak_all[arm_k * n + i], _ARM_ORDER[arm_k])
            for arm_k, stream in enumerate(streams)
            for i, t in enumerate(stream)
        )[:n]
        times = np.array([t for t, _, _ in merged])
        tiebreak = np.array([tb for _, tb, _ in merged])
        arms = [arm for _, _, arm in merged]
    turn_idx = rng.choice(3, size=n, p=np.asarray(cfg.turn_probabilities, dtype=float))
    speeds = rng.uniform(cfg.entry_speed_range[0], cfg.entry_speed_range[1], size=n)
    order = np.lexsort((tiebreak, times))
    return [
        VehicleSpec(
            vehicle_id=rank + 1,
            t0=float(times[idx]),
            v0=float(speeds[idx]),
            movement=Movement(arms[idx], _TURN_ORDER[turn_idx[idx]]),
        )
        for rank, idx in enumerate(order)
    ]


class SampleRow(NamedTuple):
    """One sampled state: which vehicle, where, and how fast, at time t."""

    t: float
    vehicle_id: int
    arm: str
    turn: str
    zone: str
    p: float
    v: float
    u: float
    j: float


@dataclass(frozen=True)
class VehicleRecord:
    """Everything the run decided about one vehicle."""

    spec: VehicleSpec          # entry-time spec (t0 is the gated entry)
    arrival_time: float        # when the vehicle reached the control-zone boundary
    schedule: Schedule
    cz: CzTrajectory
    mz: MzTrajectory
    feasibility: FeasibilityReport
    leave_time: float          # exit time plus the constant-speed clearance window


@dataclass(frozen=True)
class AuditFinding:
    kind: str                  # "cz_gap" | "mz_overlap" | "exit_spacing"
    vehicle_id: int
    other_id: int
    time: float
    value: float
    bound: float


@dataclass(frozen=True)
class AuditReport:
    findings: Tuple[AuditFinding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


@dataclass(frozen=True)
class SimRun:
    config: SimConfig
    vehicles: Tuple[VehicleRecord, ...]
    samples: Tuple[SampleRow, ...]
    binding_histogram: Dict[str, int]
    audit: AuditReport


def _rear_end_clear(report: FeasibilityReport) -> bool:
    return not any(v.kind == "rear_end" for v in report.violations)


def _gate_check(
    spec: VehicleSpec,
    queue: Sequence[Schedule],
    leader: Optional[CzTrajectory],
    g: IntersectionGeometry,
) -> bool:
    sched = schedule_vehicle(spec, queue, g)
    traj = solve_cz(spec.t0, spec.v0, sched.tm, sched.vm, g.cz_length)
    return _rear_end_clear(check_feasibility(traj, g, leader=leader))


def _gated_entry(
    spec: VehicleSpec,
    queue: Sequence[Schedule],
    leader: Optional[CzTrajectory],
    g: IntersectionGeometry,
) -> float:
    """Earliest control-zone entry at or after arrival that keeps the
    planned approach at least min_safe_distance behind the lane leader."""
    if leader is None:
        return spec.t0
    if _gate_check(spec, queue, leader, g):
        return spec.t0
    low = spec.t0
    high = low + _GATE_SCAN_STEP
    # the gap condition holds trivially once the leader has left the
    # control zone, so the forward scan always terminates
    while not _gate_check(replace(spec, t0=high), queue, leader, g):
        low = high
        high += _GATE_SCAN_STEP
        if high > leader.tm + _GATE_SCAN_STEP:
            high = leader.tm + _GATE_SCAN_STEP
            break
    while high - low > _GATE_RESOLUTION:
        mid = 0.5 * (low + high)
        if _gate_check(replace(spec, t0=mid), queue, leader, g):
            high = mid
        else:
            low = mid
    return high


def _solve_mz_for(cfg: SimConfig, boundary) -> MzTrajectory:
    if cfg.objective is MzVariant.FUEL_ONLY:
        return solve_mz_fuel(boundary)
    if cfg.objective is MzVariant.JERK_ONLY:
        return solve_mz_jerk(boundary)
    q1, q2 = normalization_weights(cfg.geometry.u_max, cfg.jerk_scale)
    return solve_mz_weighted(boundary, cfg.weight, q1, q2)


def run(cfg: SimConfig) -> SimRun:
    """Simulate one scenario end to end.

    Arrivals are replayed through the entry gate one commitment at a time:
    among the four arms' next-in-line vehicles, whichever can enter the
    control zone earliest is admitted, scheduled against the queue so far,
    and assigned its closed-form trajectories.  Queue ids are (re)assigned
    at the gate, so they track the order vehicles actually enter rather
    than the order they showed up upstream.  Scheduling never looks at the
    merging-zone objective, so runs differing only in objective produce
    identical schedules.
    """
    g = cfg.geometry
    arrivals = generate_arrivals(cfg)
    pending: Dict[Arm, List[VehicleSpec]] = {arm: [] for arm in _ARM_ORDER}
    for spec in arrivals:
        pending[spec.movement.entry_arm].append(spec)

    queue: List[Schedule] = []
    trajectories: Dict[int, CzTrajectory] = {}
    committed: List[Tuple[VehicleSpec, float, Schedule, CzTrajectory, Optional[int]]] = []
    lane_leader: Dict[Arm, int] = {}
    clock = 0.0

    while any(pending[arm] for arm in _ARM_ORDER):
        best = None
        for arm in _ARM_ORDER:
            if not pending[arm]:
                continue
            head = pending[arm][0]
            leader_id = lane_leader.get(arm)
            leader = trajectories[leader_id] if leader_id is not None else None
            # gate from no earlier than the last committed entry: a commit
            # elsewhere can lengthen this head's queue slot and relax its
            # gate below times the coordinator has already passed, and
            # admitting it retroactively would break entry-order ids
            candidate = head if head.t0 >= clock else replace(head, t0=clock)
            entry = _gated_entry(candidate, queue, leader, g)
            key = (entry, head.t0, head.vehicle_id)
            if best is None or key < best[0]:
                best = (key, arm, head, entry, leader_id)
        _, arm, head, entry, leader_id = best
        clock = entry
        pending[arm].pop(0)
        spec = replace(head, vehicle_id=len(queue) + 1, t0=entry)
        sched = schedule_vehicle(spec, queue, g)
        cz = solve_cz(spec.t0, spec.v0, sched.tm, sched.vm, g.cz_length)
        queue.append(sched)
        trajectories[spec.vehicle_id] = cz
        committed.append((spec, head.t0, sched, cz, leader_id))
        lane_leader[arm] = spec.vehicle_id

    records = []
    for spec, arrival_time, sched, cz, leader_id in committed:
        boundary = boundary_from_schedule(sched, g, u_start=float(cz.control(sched.tm)))
        mz = _solve_mz_for(cfg, boundary)
        leader = trajectories[leader_id] if leader_id is not None else None
        report = check_feasibility(cz, g, leader=leader)
        records.append(
            VehicleRecord(
                spec=spec,
                arrival_time=arrival_time,
                schedule=sched,
                cz=cz,
                mz=mz,
                feasibility=report,
                leave_time=sched.tf + g.min_safe_distance / sched.vf,
            )
        )

    samples = _sample_states(records, cfg)
    histogram = _binding_histogram(records)
    audit = _audit(cfg, tuple(records), samples)
    return SimRun(
        config=cfg,
        vehicles=tuple(records),
        samples=samples,
        binding_histogram=histogram,
        audit=audit,
    )


def _binding_histogram(records: Sequence[VehicleRecord]) -> Dict[str, int]:
    histogram = {case: 0 for case in ("same_exit", "same_entry", "lateral", "fifo", "feasibility")}
    for rec in records:
        histogram[rec.schedule.binding_case] += 1
    return histogram


def _sample_states(records: Sequence[VehicleRecord], cfg: SimConfig) -> Tuple[SampleRow, ...]:
    """State table on the shared time grid k * sample_step.

    Rows exist from a vehicle's control-zone entry until it has cleared
    the safety window past the merge-zone exit; beyond the exit the speed
    is held constant.  The shared grid means any two vehicles present at
    the same instant appear in the same time slice, which is what the
    auditor's pairwise checks rely on.
    """
    step = cfg.sample_step
    rows: List[SampleRow] = []
    for rec in records:
        sched = rec.schedule
        first = math.ceil(rec.spec.t0 / step - 1e-9)
        last = math.floor(rec.leave_time / step + 1e-9)
        arm = rec.spec.movement.entry_arm.value
        turn = rec.spec.movement.turn.value
        p_end = rec.mz.boundary.p_end
        for k in range(first, last + 1):
            t = k * step
            if t < sched.tm:
                zone = ZONE_CZ
                p = float(rec.cz.position(t))
                v = float(rec.cz.speed(t))
                u = float(rec.cz.control(t))
                j = float(rec.cz.jerk(t))
            elif t < sched.tf:
                zone = ZONE_MZ
                p = float(rec.mz.position(t))
                v = float(rec.mz.speed(t))
                u = float(rec.mz.control(t))
                j = float(rec.mz.jerk(t))
            else:
                zone = ZONE_OUT
                p = p_end + sched.vf * (t - sched.tf)
                v = sched.vf
                u = 0.0
                j = 0.0
            rows.append(
                SampleRow(
                    t=t, vehicle_id=rec.spec.vehicle_id, arm=arm, turn=turn,
                    zone=zone, p=p, v=v, u=u, j=j,
                )
            )
    rows.sort(key=lambda row: (row.t, row.vehicle_id))
    return tuple(rows)


def _audit(
    cfg: SimConfig,
    vehicles: Tuple[VehicleRecord, ...],
    samples: Tuple[SampleRow, ...],
    gap_tol: float = 1e-3,
    time_tol: float = 1e-6,
    min_safe_distance: Optional[float] = None,
) -> AuditReport:
    delta = cfg.geometry.min_safe_distance if min_safe_distance is None else min_safe_distance
    findings: List[AuditFinding] = []

    by_vehicle: Dict[int, List[SampleRow]] = {}
    for row in samples:
        by_vehicle.setdefault(row.vehicle_id, []).append(row)
    movements = {rec.spec.vehicle_id: rec.spec.movement for rec in vehicles}

    # Rear-end inside the control zone: each vehicle against the vehicle
    # immediately ahead of it on the same arm, by entry order.
    lane_pred: Dict[int, int] = {}
    last_on_arm: Dict[Arm, int] = {}
    for rec in vehicles:
        arm = rec.spec.movement.entry_arm
        if arm in last_on_arm:
            lane_pred[rec.spec.vehicle_id] = last_on_arm[arm]
        last_on_arm[arm] = rec.spec.vehicle_id
    for follower_id, leader_id in lane_pred.items():
        leader_rows = {
            row.t: row for row in by_vehicle.get(leader_id, ()) if row.zone == ZONE_CZ
        }
        for row in by_vehicle.get(follower_id, ()):
            if row.zone != ZONE_CZ:
                continue
            lead = leader_rows.get(row.t)
            if lead is None:
                continue
            gap = lead.p - row.p
            if gap < delta - gap_tol:
                findings.append(
                    AuditFinding("cz_gap", follower_id, leader_id, row.t, gap, delta)
                )
                break

    # Lateral mutual exclusion: no time slice may hold two crossing-path
    # vehicles inside the merge zone together.
    lateral_seen = set()
    slice_start = 0
    for idx in range(len(samples) + 1):
        if idx < len(samples) and samples[idx].t == samples[slice_start].t:
            continue
        time_slice = [row for row in samples[slice_start:idx] if row.zone == ZONE_MZ]
        for first_idx in range(len(time_slice)):
            for second_idx in range(first_idx + 1, len(time_slice)):
                a, b = time_slice[first_idx], time_slice[second_idx]
                pair = (a.vehicle_id, b.vehicle_id)
                if pair in lateral_seen:
                    continue
                cls = classify(movements[a.vehicle_id], movements[b.vehicle_id])
                if cls is ConflictClass.LATERAL:
                    lateral_seen.add(pair)
                    findings.append(
                        AuditFinding("mz_overlap", b.vehicle_id, a.vehicle_id, a.t, 0.0, 0.0)
                    )
        slice_start = idx

    # Exit spacing: vehicles leaving into the same lane must be at least
    # the safety distance apart, at the leader's exit speed, when they
    # cross the merge-zone end.  Times come from the trajectory windows.
    for later_idx in range(len(vehicles)):
        later = vehicles[later_idx]
        for earlier_idx in range(later_idx):
            earlier = vehicles[earlier_idx]
            cls = classify(earlier.spec.movement, later.spec.movement)
            if cls is not ConflictClass.SAME_EXIT:
                continue
            required = earlier.mz.boundary.tf + delta / earlier.mz.boundary.vf
            actual = later.mz.boundary.tf
            if actual < required - time_tol:
                findings.append(
                    AuditFinding(
                        "exit_spacing",
                        later.spec.vehicle_id,
                        earlier.spec.vehicle_id,
                        actual,
                        actual - earlier.mz.boundary.tf,
                        delta / earlier.mz.boundary.vf,
                    )
                )

    findings.sort(key=lambda f: (f.time, f.kind, f.vehicle_id, f.other_id))
    return AuditReport(findings=tuple(findings))


def audit_run(
    run_result: SimRun,
    gap_tol: float = 1e-3,
    time_tol: float = 1e-6,
    min_safe_distance: Optional[float] = None,
) -> AuditReport:
    """Re-verify a finished run's safety from its sampled states.

    Checks the control-zone gap to each vehicle's lane leader at every
    shared sample time, merge-zone mutual exclusion of crossing paths at
    every time slice, and exit-lane spacing between trajectory windows.
    Works from the state table, trajectory records, and geometry only;
    the scheduler's candidate bookkeeping plays no part.  Overriding
    min_safe_distance audits the run against a stricter (or looser)
    spacing than it was planned for.
    """
    return _audit(
        run_result.config,
        run_result.vehicles,
        run_result.samples,
        gap_tol=gap_tol,
        time_tol=time_tol,
        min_safe_distance=min_safe_distance,
    )
