from .config import (
    ExperimentConfig, ConfigError, load_config, config_from_dict, METHODS
)
from .runner import (
    RunResult, run_experiment, aggregate_report, read_run,
    build_decomposition, spectrum_document, condition_point, psi_point,
    select_method, write_frame, ensemble_file, versions
)
