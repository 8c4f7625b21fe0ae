"""Scenario files and exports."""

from .export import (
    TopologySnapshot,
    export_topology,
    export_trajectory,
    read_trajectory_csv,
    topology_snapshot,
    trajectory_from_json,
    write_artifact,
)
from .scenario import (
    ScenarioFile,
    bundled_names,
    load_bundled,
    load_scenario,
    parse_scenario,
    resolve_scenario_path,
    serialize_scenario,
)

__all__ = [
    "ScenarioFile",
    "TopologySnapshot",
    "bundled_names",
    "export_topology",
    "export_trajectory",
    "load_bundled",
    "load_scenario",
    "parse_scenario",
    "read_trajectory_csv",
    "resolve_scenario_path",
    "serialize_scenario",
    "topology_snapshot",
    "trajectory_from_json",
    "write_artifact",
]
