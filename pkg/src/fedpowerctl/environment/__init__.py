from .channel import (
    ChannelState,
    Topology,
    TopologyConfig,
    bessel_j0,
    build_topology,
    compute_neighbor_sets,
    dbm_to_watts,
    init_fading,
    initial_channel_state,
    jakes_rho,
    large_scale_gains,
    path_loss_db,
    step_fading,
    watts_to_dbm,
)
from .netsim import (
    EnvConfig,
    EnvStep,
    NormalizationConstants,
    PowerControlEnv,
    action_to_power,
    actions_to_powers,
    allocation_from_links,
    build_observation,
    build_observations,
    link_gain_matrix,
    mean_rate_per_user,
    network_sum_rate,
    rates,
    reward,
    sinr,
    sinr_matrix,
)
