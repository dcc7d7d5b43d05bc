from .config import PRESETS, ExperimentConfig, emit_run, parse_compare, parse_run, parse_sweep
from .runner import compare, run, sweep, trajectory_csv, write_trajectory_csv
from .checks import check
