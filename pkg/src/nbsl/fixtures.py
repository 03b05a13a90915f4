"""Shipped scenario fixtures."""

from __future__ import annotations

from dataclasses import replace
from importlib import resources

from .harness import Scenario
from .scenario import parse_scenario_text


def fixture_names() -> list[str]:
    files = resources.files(__package__).joinpath("fixtures").iterdir()
    return sorted(f.name[: -len(".yaml")] for f in files if f.name.endswith(".yaml"))


def fixture_text(name: str) -> str:
    if name not in fixture_names():
        raise KeyError(f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    return resources.files(__package__).joinpath("fixtures", f"{name}.yaml").read_text()


def load_fixture(name: str, **overrides) -> Scenario:
    """Parse a shipped fixture, optionally replacing top-level scenario fields."""
    scenario = parse_scenario_text(fixture_text(name), f"fixture:{name}")
    return replace(scenario, **overrides) if overrides else scenario
