from .experiment_specification import load_experiment_config, run_experiment
from .signal_processing import convergence_episode, smooth
