from .integrate import integrate_step, rk4_step
from .logs import ESTIMATOR_COLUMNS, LOG_COLUMNS, SCHEMA_VERSION, CsvLog, read_log, read_sidecar
from .metrics import Metrics, compute_tracking_metrics, empty_metrics
from .runner import ArmScript, SimResult, Simulation, run_scenario
from .scenario import DEFAULTS, Scenario, apply_override, deep_merge, parse_override
from .trajectories import Circle, Hold, Reference, Trapezoid, Waypoints, build_reference, letter_points
