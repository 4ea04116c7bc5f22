"""Scenario configs, sweeps, figure commands and the command-line interface."""
from .config import ConfigError, Scenario, ScenarioConfig, build_config, parse_file, parse_lines
from .sweep import NumericFailure, SweepResult, run_scenario, write_csv
from .figures import fig2, fig3a, fig3b, fig4, run_figure
from .rwa import RWAReport, fidelity_deficit, rwa_report
