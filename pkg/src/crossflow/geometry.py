"""Intersection layout, movements, and pairwise conflict classification.

The junction is a four-arm crossing with one approach lane per arm and a
square merge zone at the center.  Each vehicle approaches through a
control zone of length ``cz_length`` and then follows a fixed curve
through the merge square: a straight chord, or a quarter-circle arc for
turns.  Two movements conflict in one of four ways: they share the entry
lane, share the exit lane, cross each other inside the merge zone, or
not at all.  Everything in this module is a pure value type, so a single
geometry instance can be shared freely by the planners and the simulator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple


class Arm(Enum):
    """Compass label of an approach/exit leg."""

    NORTH = "N"
    EAST = "E"
    SOUTH = "S"
    WEST = "W"


class Turn(Enum):
    LEFT = "left"
    STRAIGHT = "straight"
    RIGHT = "right"


class ConflictClass(Enum):
    """How the merge-zone paths of two movements can interact."""

    SAME_ENTRY = "same_entry"   # rear-end risk at the start of the merge zone
    SAME_EXIT = "same_exit"     # rear-end risk at the end of the merge zone
    LATERAL = "lateral"         # crossing paths inside the merge zone
    NO_CONFLICT = "no_conflict"


# Right-hand traffic: straight continues to the opposite arm, a right turn
# exits the adjacent arm clockwise of the travel direction, a left turn the
# adjacent arm counterclockwise.
_EXIT_ARM = {
    (Arm.WEST, Turn.STRAIGHT): Arm.EAST,
    (Arm.WEST, Turn.RIGHT): Arm.SOUTH,
    (Arm.WEST, Turn.LEFT): Arm.NORTH,
    (Arm.EAST, Turn.STRAIGHT): Arm.WEST,
    (Arm.EAST, Turn.RIGHT): Arm.NORTH,
    (Arm.EAST, Turn.LEFT): Arm.SOUTH,
    (Arm.NORTH, Turn.STRAIGHT): Arm.SOUTH,
    (Arm.NORTH, Turn.RIGHT): Arm.WEST,
    (Arm.NORTH, Turn.LEFT): Arm.EAST,
    (Arm.SOUTH, Turn.STRAIGHT): Arm.NORTH,
    (Arm.SOUTH, Turn.RIGHT): Arm.EAST,
    (Arm.SOUTH, Turn.LEFT): Arm.WEST,
}


@dataclass(frozen=True)
class Movement:
    """One path through the intersection: an entry arm plus a turn choice."""

    entry_arm: Arm
    turn: Turn

    @property
    def exit_arm(self) -> Arm:
        return _EXIT_ARM[(self.entry_arm, self.turn)]

    def __str__(self) -> str:
        return f"{self.entry_arm.value}:{self.turn.value}"


ALL_MOVEMENTS: Tuple[Movement, ...] = tuple(
    Movement(arm, turn) for arm in Arm for turn in Turn
)


@dataclass(frozen=True)
class TurnTimeFormula:
    """Highway-design rule for merge transit times, used when no table is given.

    The desirable turning speed follows the standard curve-design relation
    v = sqrt(15 * R * (0.01 * E + F)) with the radius R in feet, the
    superelevation rate E in percent (zero on urban streets), and the side
    friction factor F dimensionless.  The transit time is the quotient
    R / v taken at face value, in seconds, which is how the rule is used in
    intersection design practice.  Straight movements instead cross the
    square at the through speed, taking mz_side / straight-speed seconds.
    """

    radius_left_ft: Optional[float] = None
    radius_right_ft: Optional[float] = None
    side_friction: Optional[float] = None
    superelevation: float = 0.0

    def __post_init__(self) -> None:
        for name in ("radius_left_ft", "radius_right_ft", "side_friction"):
            value = getattr(self, name)
            if value is not None and value <= 0.0:
                raise ValueError(f"{name} must be positive, got {value}")
        if self.superelevation < 0.0:
            raise ValueError(
                f"superelevation must be nonnegative, got {self.superelevation}"
            )

    def transit_time(self, turn: Turn) -> float:
        if turn is Turn.STRAIGHT:
            raise ValueError("straight transit time comes from mz_side / straight speed")
        radius = self.radius_left_ft if turn is Turn.LEFT else self.radius_right_ft
        field = "radius_left_ft" if turn is Turn.LEFT else "radius_right_ft"
        if radius is None:
            raise ValueError(f"{field} is required in formula mode")
        if self.side_friction is None:
            raise ValueError("side_friction is required in formula mode")
        speed = math.sqrt(15.0 * radius * (0.01 * self.superelevation + self.side_friction))
        return radius / speed


@dataclass(frozen=True)
class IntersectionGeometry:
    """Dimensions, speed limits, and merge-zone kinematics of one junction.

    Defaults reproduce the baseline calibration used throughout the test
    suite: a 400 m approach, a 30 m merge square, 10 m minimum spacing,
    and merge speeds of 8 / 10 / 6 m/s for left / straight / right
    movements with transit times of 5 / 3 / 3 s.
    """

    cz_length: float = 400.0
    mz_side: float = 30.0
    min_safe_distance: float = 10.0
    v_min: float = 0.0
    v_max: float = 13.0
    u_min: float = -3.0
    u_max: float = 3.0
    mz_speed_left: float = 8.0
    mz_speed_straight: float = 10.0
    mz_speed_right: float = 6.0
    # Transit times (left, straight, right); None derives the straight time
    # from mz_side / mz_speed_straight and requires a formula for turns.
    turn_times: Optional[Tuple[float, float, float]] = (5.0, 3.0, 3.0)
    turn_time_formula: Optional[TurnTimeFormula] = None
    # Along-curve lengths of the turn paths; None uses the quarter-circle
    # arcs inscribed in the merge square (3*pi*S/8 left, pi*S/8 right).
    left_path_length: Optional[float] = None
    right_path_length: Optional[float] = None

    def __post_init__(self) -> None:
        if self.mz_side <= 0.0:
            raise ValueError(f"mz_side must be positive, got {self.mz_side}")
        if self.cz_length <= self.mz_side:
            raise ValueError(
                f"cz_length must exceed mz_side, got {self.cz_length} <= {self.mz_side}"
            )
        if self.min_safe_distance <= 0.0:
            raise ValueError(
                f"min_safe_distance must be positive, got {self.min_safe_distance}"
            )
        if self.min_safe_distance >= self.cz_length:
            raise ValueError("min_safe_distance must be smaller than cz_length")
        if not 0.0 <= self.v_min < self.v_max:
            raise ValueError(
                f"speed bounds need 0 <= v_min < v_max, got [{self.v_min}, {self.v_max}]"
            )
        if not self.u_min < 0.0 < self.u_max:
            raise ValueError(
                f"accel bounds must straddle zero, got [{self.u_min}, {self.u_max}]"
            )
        for name in ("mz_speed_left", "mz_speed_straight", "mz_speed_right"):
            speed = getattr(self, name)
            if not self.v_min < speed <= self.v_max:
                raise ValueError(
                    f"{name} must lie in ({self.v_min}, {self.v_max}], got {speed}"
                )
        if self.turn_times is not None:
            if self.turn_time_formula is not None:
                raise ValueError("give either turn_times or turn_time_formula, not both")
            if len(self.turn_times) != 3 or any(dt <= 0.0 for dt in self.turn_times):
                raise ValueError(f"turn_times must be three positive values, got {self.turn_times}")
        for name in ("left_path_length", "right_path_length"):
            override = getattr(self, name)
            if override is not None and override <= 0.0:
                raise ValueError(f"{name} must be positive, got {override}")

    def path_length(self, turn: Turn) -> float:
        """Distance along the merge-zone curve for one turn choice, in meters."""
        if turn is Turn.STRAIGHT:
            return self.mz_side
        if turn is Turn.LEFT:
            if self.left_path_length is not None:
                return self.left_path_length
            return 3.0 * math.pi * self.mz_side / 8.0
        if self.right_path_length is not None:
            return self.right_path_length
        return math.pi * self.mz_side / 8.0

    def mz_speed(self, turn: Turn) -> float:
        if turn is Turn.LEFT:
            return self.mz_speed_left
        if turn is Turn.RIGHT:
            return self.mz_speed_right
        return self.mz_speed_straight

    def transit_time(self, turn: Turn) -> float:
        """Scheduled merge-zone transit duration for one turn choice, in seconds."""
        if self.turn_times is not None:
            left, straight, right = self.turn_times
            return {Turn.LEFT: left, Turn.STRAIGHT: straight, Turn.RIGHT: right}[turn]
        if turn is Turn.STRAIGHT:
            return self.mz_side / self.mz_speed_straight
        if self.turn_time_formula is None:
            raise ValueError("turn transit times need either turn_times or turn_time_formula")
        return self.turn_time_formula.transit_time(turn)


def turn_time(m: Movement, g: IntersectionGeometry) -> float:
    """Scheduled merge-zone transit duration of a movement, in seconds."""
    return g.transit_time(m.turn)


def mz_exit_speed(m: Movement, g: IntersectionGeometry) -> float:
    """Boundary speed of the merge-zone traversal; entry and exit speeds match."""
    return g.mz_speed(m.turn)


# ---------------------------------------------------------------------------
# Merge-zone path curves and their intersection predicate.
#
# Coordinates are in units of a quarter square side, so the merge square
# spans [-2, 2] on both axes and lane centerlines sit at offset 1 (each road
# carries one lane per direction, keeping right).  The classification is
# scale-free, so the unit choice is arbitrary.

_ENTRY_POINT = {
    Arm.WEST: (-2.0, -1.0),
    Arm.NORTH: (-1.0, 2.0),
    Arm.EAST: (2.0, 1.0),
    Arm.SOUTH: (1.0, -2.0),
}
_EXIT_POINT = {
    Arm.EAST: (2.0, -1.0),
    Arm.SOUTH: (-1.0, -2.0),
    Arm.WEST: (-2.0, 1.0),
    Arm.NORTH: (1.0, 2.0),
}

_EPS = 1e-9


def _mz_path(m: Movement):
    """Path primitive: ("seg", a, b) or ("arc", center, radius, a, b)."""
    a = _ENTRY_POINT[m.entry_arm]
    b = _EXIT_POINT[m.exit_arm]
    if m.turn is Turn.STRAIGHT:
        return ("seg", a, b)
    # The arc center is the square corner shared by the two boundary edges
    # the endpoints sit on; each endpoint contributes its edge coordinate.
    cx = a[0] if abs(a[0]) == 2.0 else b[0]
    cy = a[1] if abs(a[1]) == 2.0 else b[1]
    radius = math.hypot(a[0] - cx, a[1] - cy)
    return ("arc", (cx, cy), radius, a, b)


def _cross2(ux: float, uy: float, vx: float, vy: float) -> float:
    return ux * vy - uy * vx


def _on_arc(p, center, a, b) -> bool:
    """Whether a point on the full circle lies within the quarter-arc span."""
    vax, vay = a[0] - center[0], a[1] - center[1]
    vbx, vby = b[0] - center[0], b[1] - center[1]
    vpx, vpy = p[0] - center[0], p[1] - center[1]
    sweep = _cross2(vax, vay, vbx, vby)
    sign = 1.0 if sweep >= 0.0 else -1.0
    return (
        _cross2(vax, vay, vpx, vpy) * sign >= -_EPS
        and _cross2(vpx, vpy, vbx, vby) * sign >= -_EPS
    )


def _seg_seg_cross(p1, p2, q1, q2) -> bool:
    d1 = _cross2(q2[0] - q1[0], q2[1] - q1[1], p1[0] - q1[0], p1[1] - q1[1])
    d2 = _cross2(q2[0] - q1[0], q2[1] - q1[1], p2[0] - q1[0], p2[1] - q1[1])
    d3 = _cross2(p2[0] - p1[0], p2[1] - p1[1], q1[0] - p1[0], q1[1] - p1[1])
    d4 = _cross2(p2[0] - p1[0], p2[1] - p1[1], q2[0] - p1[0], q2[1] - p1[1])
    if ((d1 > _EPS and d2 < -_EPS) or (d1 < -_EPS and d2 > _EPS)) and (
        (d3 > _EPS and d4 < -_EPS) or (d3 < -_EPS and d4 > _EPS)
    ):
        return True
    # Touching or collinear contact counts as a crossing.
    def within(d, s, e, pt):
        return (
            abs(d) <= _EPS
            and min(s[0], e[0]) - _EPS <= pt[0] <= max(s[0], e[0]) + _EPS
            and min(s[1], e[1]) - _EPS <= pt[1] <= max(s[1], e[1]) + _EPS
        )

    return (
        within(d1, q1, q2, p1)
        or within(d2, q1, q2, p2)
        or within(d3, p1, p2, q1)
        or within(d4, p1, p2, q2)
    )


def _seg_arc_cross(p1, p2, center, radius, a, b) -> bool:
    dx, dy = p2[0] - p1[0], p2[1] - p1[1]
    fx, fy = p1[0] - center[0], p1[1] - center[1]
    qa = dx * dx + dy * dy
    qb = 2.0 * (fx * dx + fy * dy)
    qc = fx * fx + fy * fy - radius * radius
    disc = qb * qb - 4.0 * qa * qc
    if disc < -_EPS:
        return False
    disc = max(disc, 0.0)
    root = math.sqrt(disc)
    for t in ((-qb - root) / (2.0 * qa), (-qb + root) / (2.0 * qa)):
        if -_EPS <= t <= 1.0 + _EPS:
            p = (p1[0] + t * dx, p1[1] + t * dy)
            if _on_arc(p, center, a, b):
                return True
    return False


def _arc_arc_cross(c1, r1, a1, b1, c2, r2, a2, b2) -> bool:
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    d = math.hypot(dx, dy)
    if d < _EPS:
        # Concentric circles: distinct radii never meet; identical circles
        # only arise from identical movements, which never reach this test.
        return abs(r1 - r2) <= _EPS
    if d > r1 + r2 + _EPS or d < abs(r1 - r2) - _EPS:
        return False
    along = (r1 * r1 - r2 * r2 + d * d) / (2.0 * d)
    h_sq = r1 * r1 - along * along
    if h_sq < -_EPS:
        return False
    h = math.sqrt(max(h_sq, 0.0))
    bx, by = c1[0] + along * dx / d, c1[1] + along * dy / d
    for sx, sy in ((h * -dy / d, h * dx / d), (h * dy / d, h * -dx / d)):
        p = (bx + sx, by + sy)
        if _on_arc(p, c1, a1, b1) and _on_arc(p, c2, a2, b2):
            return True
    return False


def _paths_cross(path_a, path_b) -> bool:
    kind_a, kind_b = path_a[0], path_b[0]
    if kind_a == "seg" and kind_b == "seg":
        return _seg_seg_cross(path_a[1], path_a[2], path_b[1], path_b[2])
    if kind_a == "seg":
        return _seg_arc_cross(path_a[1], path_a[2], *path_b[1:])
    if kind_b == "seg":
        return _seg_arc_cross(path_b[1], path_b[2], *path_a[1:])
    return _arc_arc_cross(*path_a[1:], *path_b[1:])


def _build_classification() -> dict:
    table = {}
    for a in ALL_MOVEMENTS:
        for b in ALL_MOVEMENTS:
            if a.entry_arm is b.entry_arm:
                cls = ConflictClass.SAME_ENTRY
            elif a.exit_arm is b.exit_arm:
                cls = ConflictClass.SAME_EXIT
            elif _paths_cross(_mz_path(a), _mz_path(b)):
                cls = ConflictClass.LATERAL
            else:
                cls = ConflictClass.NO_CONFLICT
            table[(a, b)] = cls
    return table


_CLASSIFICATION = _build_classification()


def classify(a: Movement, b: Movement) -> ConflictClass:
    """Conflict type of two movements.

    Entry-lane equality is checked first (rear-end risk where the merge
    zone begins), then exit-lane equality (rear-end risk where it ends),
    then exact geometric crossing of the two merge-zone curves; anything
    else cannot collide.  Symmetric and total.
    """
    return _CLASSIFICATION[(a, b)]
