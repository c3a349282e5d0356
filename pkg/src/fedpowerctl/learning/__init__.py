from .agents import (
    AgentConfig,
    BaseLearner,
    DQNLearner,
    EpisodeBuffer,
    ExplorationSchedule,
    PolicyGradientLearner,
    ReplayMemory,
    Transition,
    discounted_returns,
    dqn_episode_update,
    epsilon,
    greedy_actions,
    make_learner,
    pg_episode_update,
    pg_trajectories_update,
    select_action_dqn,
    select_action_pg,
    select_actions_dqn,
    select_actions_pg,
)
from .federation import (
    TRAINING_MODES,
    AggregationPlan,
    AggregationServer,
    RunMetrics,
    comm_overhead,
    fedavg,
    run_centralized,
    run_distributed,
    run_federated,
    split_rngs,
)
from .nn import (
    AdamState,
    Mlp,
    WeightVector,
    adam_step,
    forward,
    grad_log_policy,
    grad_td_loss,
    init_weights,
    layout_hash,
    log_softmax,
    network_dims,
    parameter_count,
    softmax,
)
