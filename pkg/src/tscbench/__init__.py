"""Traffic signal control benchmark: deterministic microscopic simulator,
multi-intersection RL environment, cross-format network/flow conversion,
classical and DQN controllers, and a reproducible benchmark CLI."""

from tscbench.model import (
    FlowSet,
    FlowSpec,
    Intersection,
    Lane,
    Movement,
    Phase,
    Road,
    RoadNetwork,
    ValidationReport,
    VehicleParams,
    movement_endpoints,
    phase_movements,
    validate_network,
)

__version__ = "0.1.0"

__all__ = [
    "RoadNetwork", "Intersection", "Road", "Lane", "Movement", "Phase",
    "FlowSet", "FlowSpec", "VehicleParams", "ValidationReport",
    "validate_network", "phase_movements", "movement_endpoints",
    "__version__",
]
