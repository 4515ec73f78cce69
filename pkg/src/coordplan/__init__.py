"""Multi-robot motion planning with coordination-space stop scheduling.

Per-robot constrained probabilistic roadmaps supply candidate paths; a
high-level scheduler inserts random stops to coordinate them, records
which path edges keep colliding, and feeds that history back into
detour-based replanning.
"""

from .bench import (
    BenchmarkReport,
    Scenario,
    builtin_scenario,
    export_solution,
    import_solution,
    load_scenario,
    run_benchmark,
    save_scenario,
)
from .constraints import (
    DiscontinuityError,
    EndEffectorLine,
    NonConvergenceError,
    Unconstrained,
    constrained_interpolate,
    evaluate,
    jacobian,
    project,
)
from .feedback import (
    CollisionHistory,
    CollisionRecord,
    normalize,
    plan_with_experience,
    random_walk_region,
    record_collision,
    select_element,
)
from .geometry import (
    Circle,
    Configuration,
    Disc,
    PlanarArm,
    Rect,
    World,
    forward_kinematics,
    robot_robot_collision,
    robot_world_collision,
)
from .planners import (
    Failure,
    PlannerStats,
    Solution,
    StacParams,
    brute_force_schedule,
    priority_solve,
    solve,
    stac_solve,
    synchronous_solve,
    validate_solution,
)
from .roadmap import NoPathError, Path, Roadmap, RoadmapParams, build_roadmap
from .scheduler import (
    CandidateSolution,
    CollisionEvent,
    SweepCache,
    collision_check,
    default_resolution,
    schedule,
    schedule_priority,
)

__version__ = "0.1.0"
