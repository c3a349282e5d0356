from .baselines import brute_force_power, max_power, wmmse
from .environment import EnvConfig, PowerControlEnv, TopologyConfig
from .learning import AgentConfig, AggregationPlan, fedavg, run_centralized, run_distributed, run_federated
from .tools.experiment_specification import ExperimentConfig, load_experiment_config, run_experiment
