"""First-in-first-out crossing schedules for the merge zone.

Each vehicle is scheduled once, on control-zone entry, against the
vehicles already queued.  Its merge-zone exit time is the largest of a
small set of candidate times, one per conflict type: enough spacing
behind the latest vehicle sharing its exit lane, enough headway behind
the latest vehicle sharing its entry lane, strict serialization against
the latest laterally crossing vehicle, queue-order consistency with the
latest non-conflicting vehicle, and a physical lower bound given by full
acceleration to the speed cap.  The rule never delays a vehicle beyond
what its conflicts require, and whichever candidate wins is recorded so
runs can be analyzed case by case.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Sequence

from crossflow.geometry import (
    IntersectionGeometry,
    Movement,
    ConflictClass,
    classify,
    mz_exit_speed,
    turn_time,
)

# binding_case labels, in tie-break precedence order
CASE_SAME_EXIT = "same_exit"
CASE_SAME_ENTRY = "same_entry"
CASE_LATERAL = "lateral"
CASE_FIFO = "fifo"
CASE_FEASIBILITY = "feasibility"


@dataclass(frozen=True)
class VehicleSpec:
    """One arrival: queue id, control-zone entry time and speed, movement."""

    vehicle_id: int
    t0: float
    v0: float
    movement: Movement


@dataclass(frozen=True)
class Schedule:
    """Terminal conditions assigned to one vehicle.

    ``tm`` and ``tf`` bracket the merge-zone traversal; ``vm`` and ``vf``
    are the boundary speeds there (equal by the terminal-speed rule).
    ``binding_case`` names the candidate that achieved the maximum, and the
    four predecessor ids record which queue members drove each candidate.
    """

    vehicle_id: int
    movement: Movement
    t0: float
    v0: float
    tm: float
    tf: float
    vm: float
    vf: float
    mz_transit: float
    binding_case: str
    same_exit_pred: Optional[int] = None
    same_entry_pred: Optional[int] = None
    lateral_pred: Optional[int] = None
    fifo_pred: Optional[int] = None


QueueState = List[Schedule]


class ConflictPredecessors(NamedTuple):
    """Latest queue member of each conflict class, if any."""

    same_exit: Optional[Schedule]
    same_entry: Optional[Schedule]
    lateral: Optional[Schedule]
    fifo: Optional[Schedule]


def conflict_predecessors(spec: VehicleSpec, q: Sequence[Schedule]) -> ConflictPredecessors:
    """Scan the queue for the most recent vehicle in each conflict class."""
    latest = {cls: None for cls in ConflictClass}
    for entry in q:
        latest[classify(entry.movement, spec.movement)] = entry
    return ConflictPredecessors(
        same_exit=latest[ConflictClass.SAME_EXIT],
        same_entry=latest[ConflictClass.SAME_ENTRY],
        lateral=latest[ConflictClass.LATERAL],
        fifo=latest[ConflictClass.NO_CONFLICT],
    )


def earliest_mz_arrival(t0: float, v0: float, g: IntersectionGeometry) -> float:
    """Earliest merge-zone arrival: flat-out acceleration, then cruise.

    When the speed cap is reached inside the control zone the arrival time
    is t0 + L/v_max + (v_max - v0)^2 / (2 u_max v_max); otherwise the
    vehicle is still accelerating at the merge-zone boundary and arrives at
    t0 + (sqrt(2 L u_max + v0^2) - v0) / u_max.
    """
    if not g.v_min <= v0 <= g.v_max:
        raise ValueError(f"entry speed {v0} outside [{g.v_min}, {g.v_max}]")
    length, u_max, v_max = g.cz_length, g.u_max, g.v_max
    if 2.0 * length * u_max + v0 * v0 >= v_max * v_max:
        return t0 + length / v_max + (v_max - v0) ** 2 / (2.0 * u_max * v_max)
    return t0 + (math.sqrt(2.0 * length * u_max + v0 * v0) - v0) / u_max


def feasibility_bound(spec: VehicleSpec, g: IntersectionGeometry) -> float:
    """Physical lower bound on a vehicle's merge-zone arrival time."""
    return earliest_mz_arrival(spec.t0, spec.v0, g)


def schedule(spec: VehicleSpec, q: Sequence[Schedule], g: IntersectionGeometry) -> Schedule:
    """Assign merge-zone entry/exit times to a newly arrived vehicle.

    The exit time is the maximum over the candidates contributed by the
    conflict predecessors plus the feasibility bound; the entry time
    follows at tf minus the movement's transit duration.  Ties between
    candidates resolve toward the conflict classes in the order same-exit,
    same-entry, lateral, fifo, feasibility.
    """
    preds = conflict_predecessors(spec, q)
    transit = turn_time(spec.movement, g)
    boundary_speed = mz_exit_speed(spec.movement, g)
    earliest = earliest_mz_arrival(spec.t0, spec.v0, g)

    candidates = []
    if preds.same_exit is not None:
        e = preds.same_exit
        candidates.append((CASE_SAME_EXIT, e.tf + g.min_safe_distance / e.vf))
    if preds.same_entry is not None:
        s = preds.same_entry
        # Headway for the leader to put min_safe_distance of merge-zone path
        # behind it, at its scheduled merge speed, before this vehicle enters.
        clearance = g.min_safe_distance / s.vm
        candidates.append((CASE_SAME_ENTRY, max(s.tm + clearance + transit, s.tf)))
    if preds.lateral is not None:
        candidates.append((CASE_LATERAL, preds.lateral.tf + transit))
    if preds.fifo is not None:
        candidates.append((CASE_FIFO, preds.fifo.tf))
    candidates.append((CASE_FEASIBILITY, earliest + transit))

    binding_case, tf = max(candidates, key=lambda item: item[1])
    tm = tf - transit
    return Schedule(
        vehicle_id=spec.vehicle_id,
        movement=spec.movement,
        t0=spec.t0,
        v0=spec.v0,
        tm=tm,
        tf=tf,
        vm=boundary_speed,
        vf=boundary_speed,
        mz_transit=transit,
        binding_case=binding_case,
        same_exit_pred=preds.same_exit.vehicle_id if preds.same_exit else None,
        same_entry_pred=preds.same_entry.vehicle_id if preds.same_entry else None,
        lateral_pred=preds.lateral.vehicle_id if preds.lateral else None,
        fifo_pred=preds.fifo.vehicle_id if preds.fifo else None,
    )


@dataclass(frozen=True)
class QueueFinding:
    """One violated ordering condition between two scheduled vehicles."""

    kind: str
    vehicle_id: int
    other_id: int
    detail: str


def audit_queue(q: Sequence[Schedule]) -> List[QueueFinding]:
    """Re-check every pairwise ordering condition over a finished queue.

    Exit order must be strict between vehicles sharing an exit lane, entry
    order strict between vehicles sharing an entry lane, merge-zone
    occupancy intervals of laterally crossing vehicles must not overlap
    (touching endpoints are fine), and exit times must be non-decreasing
    along the queue.  Returns every violation found; an empty list is the
    expected outcome for queues built by schedule().
    """
    findings: List[QueueFinding] = []
    for idx in range(1, len(q)):
        if q[idx].tf < q[idx - 1].tf:
            findings.append(
                QueueFinding(
                    kind="queue_order",
                    vehicle_id=q[idx].vehicle_id,
                    other_id=q[idx - 1].vehicle_id,
                    detail=f"tf decreased: {q[idx].tf} < {q[idx - 1].tf}",
                )
            )
    for later_idx in range(len(q)):
        later = q[later_idx]
        for earlier_idx in range(later_idx):
            earlier = q[earlier_idx]
            cls = classify(earlier.movement, later.movement)
            if cls is ConflictClass.SAME_EXIT and not later.tf > earlier.tf:
                findings.append(
                    QueueFinding(
                        kind="exit_order",
                        vehicle_id=later.vehicle_id,
                        other_id=earlier.vehicle_id,
                        detail=f"tf {later.tf} not strictly after {earlier.tf}",
                    )
                )
            elif cls is ConflictClass.SAME_ENTRY and not later.tm > earlier.tm:
                findings.append(
                    QueueFinding(
                        kind="entry_order",
                        vehicle_id=later.vehicle_id,
                        other_id=earlier.vehicle_id,
                        detail=f"tm {later.tm} not strictly after {earlier.tm}",
                    )
                )
            elif cls is ConflictClass.LATERAL:
                # tm is recovered as tf - transit, so back-to-back windows can
                # overlap by one ulp; only flag overlap beyond float noise
                overlap = min(later.tf, earlier.tf) - max(later.tm, earlier.tm)
                if overlap > 1e-9:
                    findings.append(
                        QueueFinding(
                            kind="lateral_overlap",
                            vehicle_id=later.vehicle_id,
                            other_id=earlier.vehicle_id,
                            detail=(
                                f"merge windows [{later.tm}, {later.tf}] and "
                                f"[{earlier.tm}, {earlier.tf}] overlap"
                            ),
                        )
                    )
    return findings
