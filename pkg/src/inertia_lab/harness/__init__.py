"""Scenario configs, builtin suites, runner and CLI."""

from .config import ScenarioConfig, TheoremTag, config_from_dict, load_config, parse_config, validate_hypotheses
from .runner import ScenarioResult, SuiteResult, run_scenario, run_suite
from .scenarios import builtin_scenarios

__all__ = [
    "ScenarioConfig",
    "TheoremTag",
    "ScenarioResult",
    "SuiteResult",
    "builtin_scenarios",
    "config_from_dict",
    "load_config",
    "parse_config",
    "run_scenario",
    "run_suite",
    "validate_hypotheses",
]
