"""Signal-free intersection coordination for connected automated vehicles.

The package plans collision-free crossings of a four-arm intersection
without traffic lights.  Vehicles announce themselves when they enter a
control zone upstream of the central merge zone; a first-in-first-out
scheduler assigns each one merge-zone entry and exit times that rule out
rear-end and lateral conflicts, and closed-form optimal control delivers
the trajectory between those boundary conditions: minimum control effort
on the approach, and a fuel/comfort tradeoff inside the merge zone.
"""

from crossflow.geometry import (
    ALL_MOVEMENTS,
    Arm,
    ConflictClass,
    IntersectionGeometry,
    Movement,
    Turn,
    TurnTimeFormula,
    classify,
    mz_exit_speed,
    turn_time,
)
from crossflow.scheduler import (
    Schedule,
    VehicleSpec,
    audit_queue,
    conflict_predecessors,
    earliest_mz_arrival,
    feasibility_bound,
    schedule,
)
from crossflow.cz_planner import (
    CzTrajectory,
    FeasibilityReport,
    Violation,
    check_feasibility,
    cz_cost,
    solve_cz,
)
from crossflow.mz_planner import (
    MzBoundary,
    MzCosts,
    MzTrajectory,
    MzVariant,
    boundary_from_schedule,
    mz_costs,
    normalization_weights,
    solve_mz_fuel,
    solve_mz_jerk,
    solve_mz_weighted,
)
from crossflow.pareto import ParetoPoint, ParetoRun, default_grid, frontier, sweep
from crossflow.sim import (
    AuditFinding,
    AuditReport,
    SampleRow,
    SimConfig,
    SimRun,
    VehicleRecord,
    audit_run,
    generate_arrivals,
    run,
)

__version__ = "0.1.0"
