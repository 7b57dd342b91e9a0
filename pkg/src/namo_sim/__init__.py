"""2D simulator and planning library for navigation among movable obstacles."""

from .world import (FATAL, GridIndex, ObjectClass, ObjectInstance, Pose2D,
                    RobotParams, compose, footprint_world, inverse,
                    normalize_angle)
from .costmap import CostCell, LayeredCostmap
from .planner import NoPath, PlannedPath, StartBlocked, first_blocking_object, \
    path_cost, plan_astar
from .control import (Controller, ControllerConfig, RobotState,
                      VelocityCommand, motor_current, pure_pursuit_step,
                      push_required_force)
from .sim import (Scenario, ScenarioError, SimulationReport, load_scenario,
                  resolve_contacts, run_scenario, step_kinematics)

__version__ = "0.1.0"
