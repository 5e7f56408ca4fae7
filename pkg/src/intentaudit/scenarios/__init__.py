"""Bundled example models."""
from importlib import resources
from pathlib import Path

SCENARIOS = (
    "plane.im",
    "unreliable.im",
    "two_policies.im",
    "trolley_switch.im",
    "trolley_footbridge.im",
)


def scenario_path(name: str) -> Path:
    """Filesystem path of a bundled scenario, e.g. ``scenario_path("plane.im")``."""
    if name not in SCENARIOS:
        raise KeyError(f"unknown scenario {name}; choose from {', '.join(SCENARIOS)}")
    return Path(str(resources.files(__package__).joinpath(name)))
