from .experiment_specification import (
    ALGORITHMS,
    CURVE_COLUMNS,
    ExperimentConfig,
    ExperimentConfigError,
    SummaryRecord,
    algorithm_label,
    baseline_allocation,
    benchmark,
    compare_modes,
    evaluate,
    get_experiment_config_schema,
    load_experiment_config,
    run_experiment,
    smooth_curve,
    sweep_network_size,
    train,
)
