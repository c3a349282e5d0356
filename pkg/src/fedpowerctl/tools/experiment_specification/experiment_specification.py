import functools
import logging
import re
import sys
import time
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

import click
import numpy as np
import pandas as pd
import yaml
from tqdm import tqdm

from ..signal_processing import convergence_episode, smooth
from ...baselines import BASELINE_COMM_OVERHEAD, max_power, wmmse
from ...environment import (
    EnvConfig,
    PowerControlEnv,
    TopologyConfig,
    mean_rate_per_user,
    network_sum_rate,
    rates,
)
from ...learning import (
    TRAINING_MODES,
    AgentConfig,
    AggregationPlan,
    AggregationServer,
    BaseLearner,
    RunMetrics,
    comm_overhead,
    init_weights,
    make_learner,
    network_dims,
    run_centralized,
    run_distributed,
    run_federated,
    split_rngs,
)
from ...utils import (
    ConfigLoader,
    ExperimentJSONEncoder,
    FilePathType,
    OptionalFolderPathType,
    dict_deep_update,
    dump_dict_to_json,
    fill_defaults,
    iter_schema_errors,
    load_dict_from_file,
)

logger = logging.getLogger(__name__)

ALGORITHMS = ("dqn", "pg", "wmmse", "maxpower")
LEARNING_ALGORITHMS = ("dqn", "pg")
CURVE_COLUMNS = ("episode", "mean_rate_per_user", "loss", "epsilon")
BENCHMARK_COLUMNS = (
    ("dqn", "federated"),
    ("dqn", "distributed"),
    ("dqn", "centralized"),
    ("pg", "federated"),
    ("pg", "distributed"),
    ("pg", "centralized"),
    ("wmmse", None),
    ("maxpower", None),
)

_SCHEMA_FILE_PATH = Path(__file__).parent.parent.parent / "schemas" / "experiment_config_schema.json"
_SECTIONS = dict(topology=TopologyConfig, env=EnvConfig, agent=AgentConfig)


class ExperimentConfigError(ValueError):
    """An invalid experiment configuration; `field` names the offending key."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"Invalid value for '{field}': {message}")


def _section_keys(section: str) -> Tuple[str, ...]:
    return tuple(config_field.name for config_field in fields(_SECTIONS[section]))


def _build_section(section: str, values: dict):
    try:
        return _SECTIONS[section](**values)
    except ValueError as exception:
        quoted = [name for name in re.findall(r"'(\w+)'", str(exception)) if name in values]
        field_name = quoted[0] if quoted else section
        raise ExperimentConfigError(field=field_name, message=str(exception)) from exception


@dataclass(frozen=True)
class ExperimentConfig:
    """
    Everything one run depends on. The seed fully determines every random stream.

    Topology, environment and agent parameters live in their own dataclasses; the configuration file is flat and
    `from_dict` / `to_dict` translate between the two views.
    """

    topology: TopologyConfig = field(default_factory=TopologyConfig)
    env: EnvConfig = field(default_factory=EnvConfig)
    agent: AgentConfig = field(default_factory=AgentConfig)
    algorithm: str = "dqn"
    mode: str = "federated"
    aggregation_period: Optional[int] = 100
    n_episodes: int = 7000
    eval_episodes: int = 200
    seed: int = 0
    smoothing_window: int = 100
    convergence_window: int = 100
    measure_latency: bool = False
    server_latency_s: float = 0.0
    wmmse_tol: float = 1e-5
    wmmse_max_iter: int = 500
    compare_aggregation_periods: Tuple[int, ...] = (10, 100, 1000)
    sweep_grid_sides: Tuple[int, ...] = (2, 3, 4, 5)
    save_checkpoints: bool = False
    output_folder: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "compare_aggregation_periods", tuple(self.compare_aggregation_periods))
        object.__setattr__(self, "sweep_grid_sides", tuple(self.sweep_grid_sides))
        if self.algorithm not in ALGORITHMS:
            raise ExperimentConfigError("algorithm", f"expected one of {ALGORITHMS}, received '{self.algorithm}'.")
        if self.mode not in TRAINING_MODES:
            raise ExperimentConfigError("mode", f"expected one of {TRAINING_MODES}, received '{self.mode}'.")
        if self.aggregation_period is not None and self.aggregation_period < 1:
            raise ExperimentConfigError("aggregation_period", "must be at least 1 or null.")
        for name in ("n_episodes", "eval_episodes", "smoothing_window", "convergence_window", "wmmse_max_iter"):
            if getattr(self, name) < 1:
                raise ExperimentConfigError(name, f"must be at least 1, received {getattr(self, name)}.")
        if self.seed < 0:
            raise ExperimentConfigError("seed", f"must be nonnegative, received {self.seed}.")

    @property
    def horizon(self) -> int:
        return self.env.horizon

    @property
    def is_learning(self) -> bool:
        return self.algorithm in LEARNING_ALGORITHMS

    @classmethod
    def from_dict(cls, flat: dict) -> "ExperimentConfig":
        """Build a configuration from flat keys; unknown keys raise ExperimentConfigError."""
        flat = dict(flat)
        sections = dict()
        for section in _SECTIONS:
            values = {key: flat.pop(key) for key in _section_keys(section) if key in flat}
            sections[section] = _build_section(section, values)
        experiment_keys = {config_field.name for config_field in fields(cls)} - set(_SECTIONS)
        unknown = sorted(set(flat) - experiment_keys)
        if unknown:
            raise ExperimentConfigError(unknown[0], "is not a recognized configuration key.")
        return cls(**sections, **flat)

    def to_dict(self) -> dict:
        """Flat keys of every parameter; tuples become lists so the result serializes to JSON or YAML."""
        flat = dict()
        for section in _SECTIONS:
            flat.update(asdict(getattr(self, section)))
        for config_field in fields(self):
            if config_field.name not in _SECTIONS:
                flat[config_field.name] = getattr(self, config_field.name)
        return {key: list(value) if isinstance(value, tuple) else value for key, value in flat.items()}

    def with_overrides(self, **overrides) -> "ExperimentConfig":
        """Return a copy with flat keys replaced."""
        return ExperimentConfig.from_dict(dict(self.to_dict(), **overrides))


@dataclass(frozen=True)
class SummaryRecord:
    """One column of the performance table."""

    algorithm: str
    mean_rate_per_user: float
    std_rate_per_user: float
    decision_latency_s: float
    comm_overhead: float


def get_experiment_config_schema() -> dict:
    """The configuration schema with the default of every key filled in."""
    schema = load_dict_from_file(file_path=_SCHEMA_FILE_PATH)
    fill_defaults(schema, defaults=ExperimentConfig().to_dict())
    return schema


def load_experiment_config(
    file_path: Optional[FilePathType] = None, assignments: Optional[dict] = None, **overrides
) -> ExperimentConfig:
    """
    Load, validate and complete an experiment configuration.

    Parameters
    ----------
    file_path : FilePathType, optional
        A flat .yml or .json file. Every key is optional; missing keys take their defaults.
    assignments : dict, optional
        Explicit key-value overrides applied as given, None included.
    **overrides
        Flat keys layered on top of the file, e.g. command line flags. Values of None are ignored.

    Raises
    ------
    ExperimentConfigError
        If the file cannot be parsed, a key is unknown or a value violates its constraints.
    """
    specification = dict()
    if file_path is not None:
        try:
            specification = load_dict_from_file(file_path=file_path)
        except (ValueError, yaml.YAMLError) as exception:
            raise ExperimentConfigError(field="config", message=str(exception)) from exception
        if not isinstance(specification, dict):
            raise ExperimentConfigError(field="config", message="the file must hold a flat key-value mapping.")
    specification = dict_deep_update(specification, assignments or dict())
    specification = dict_deep_update(specification, overrides, skip_none=True)

    schema = load_dict_from_file(file_path=_SCHEMA_FILE_PATH)
    for field_name, message in iter_schema_errors(instance=specification, schema=schema):
        raise ExperimentConfigError(field=field_name, message=message)
    return ExperimentConfig.from_dict(specification)


_LEARNED_LABELS = {
    ("dqn", "federated"): "FDQN",
    ("dqn", "distributed"): "DQN-Dist",
    ("dqn", "centralized"): "DQN-Cent",
    ("pg", "federated"): "FDPG",
    ("pg", "distributed"): "DPG-Dist",
    ("pg", "centralized"): "DPG-Cent",
}


def algorithm_label(algorithm: str, mode: Optional[str] = None) -> str:
    """Column label of an algorithm and training mode, e.g. FDQN, DQN-Dist or DPG-Cent."""
    if algorithm == "wmmse":
        return "WMMSE"
    if algorithm == "maxpower":
        return "Max Power"
    return _LEARNED_LABELS[(algorithm, mode)]


def _seed_sequences(seed: int) -> Tuple[np.random.SeedSequence, ...]:
    """Training environment, evaluation environment, weight initialization and agent streams."""
    return tuple(np.random.SeedSequence(seed).spawn(4))


def train(
    config: ExperimentConfig, verbose: bool = False, checkpoint_folder: OptionalFolderPathType = None
) -> Tuple[List[BaseLearner], RunMetrics, AggregationPlan]:
    """
    Train the learners of a learning configuration in its training mode.

    Every mode starts from one seeded initialization; the distributed and federated modes hold one learner per
    cell, the centralized mode a single shared learner.
    """
    if not config.is_learning:
        raise ExperimentConfigError("algorithm", f"'{config.algorithm}' is not a learning algorithm.")
    train_sequence, _, init_sequence, agent_sequence = _seed_sequences(config.seed)
    env = PowerControlEnv(topology_config=config.topology, env_config=config.env, seed=train_sequence)
    agent_rngs = split_rngs(agent_sequence, n_streams=env.n_cells)

    layer_dims = network_dims(
        input_dim=env.observation_dim,
        hidden_layers=config.agent.hidden_layers,
        output_dim=config.env.n_power_levels,
    )
    initial_net = init_weights(layer_dims, rng=np.random.default_rng(init_sequence))
    plan = AggregationPlan.from_users_per_cell(
        mode=config.mode,
        users_per_cell=env.users_per_cell,
        aggregation_period=config.aggregation_period if config.mode == "federated" else None,
    )
    n_learners = 1 if config.mode == "centralized" else env.n_cells
    learners = [
        make_learner(
            algorithm=config.algorithm,
            net=initial_net,
            config=config.agent,
            capacity_per_link=config.horizon,
            n_episodes=config.n_episodes,
            rng=agent_rngs[index],
        )
        for index in range(n_learners)
    ]

    if config.mode == "federated":
        server = AggregationServer(
            layer_dims=layer_dims, client_weights=plan.client_weights, checkpoint_folder=checkpoint_folder
        )
        metrics = run_federated(env, learners, plan, config.n_episodes, agent_rngs, server=server, verbose=verbose)
    elif config.mode == "distributed":
        metrics = run_distributed(env, learners, config.n_episodes, agent_rngs, verbose=verbose)
    else:
        metrics = run_centralized(env, learners[0], config.n_episodes, agent_rngs[0], verbose=verbose)
    return learners, metrics, plan


def evaluate(
    config: ExperimentConfig,
    learners: Optional[Sequence[BaseLearner]] = None,
    verbose: bool = False,
) -> Tuple[np.ndarray, float]:
    """
    Evaluate a trained policy or a baseline on `eval_episodes` fresh episodes with exploration off.

    Learners pick the level with the largest Q-value or probability; baselines allocate per slot on the
    instantaneous gains. Each base station's decision is timed separately.

    Returns
    -------
    episode_means : numpy.ndarray
        Mean rate per user of every evaluation episode.
    decision_latency_s : float
        Mean wall-clock seconds per decision, or 0.0 when `measure_latency` is off.
    """
    if config.is_learning and learners is None:
        raise ValueError("Evaluating a learning algorithm requires trained learners!")
    _, eval_sequence, _, _ = _seed_sequences(config.seed)
    env = PowerControlEnv(topology_config=config.topology, env_config=config.env, seed=eval_sequence)
    shared_model = config.mode == "centralized"
    p_max, noise = config.env.p_max_w, config.env.noise_w

    episode_means, latencies = [], []
    for _ in tqdm(range(config.eval_episodes), desc="Evaluating", disable=not verbose):
        observations = env.reset()
        user_mask = env.user_mask
        slot_rates = []
        done = False
        while not done:
            if config.is_learning:
                levels = np.zeros(shape=user_mask.shape, dtype=int)
                for cell in range(env.n_cells):
                    learner = learners[0] if shared_model else learners[cell]
                    users = np.flatnonzero(user_mask[cell])
                    start = time.perf_counter()
                    levels[cell, users] = learner.act_greedy(observations[cell][users])
                    latency = time.perf_counter() - start
                    latencies.append(latency + config.server_latency_s if shared_model else latency)
                step = env.step(levels)
            else:
                start = time.perf_counter()
                if config.algorithm == "wmmse":
                    powers = wmmse(
                        env.gains,
                        P_max=p_max,
                        noise=noise,
                        tol=config.wmmse_tol,
                        max_iter=config.wmmse_max_iter,
                        user_mask=user_mask,
                    )
                else:
                    powers = max_power(env.topology, P_max=p_max)
                latencies.append(time.perf_counter() - start)
                step = env.step_powers(powers)
            slot_rates.append(mean_rate_per_user(step.rates, user_mask))
            observations = step.observations
            done = step.done
        episode_means.append(np.mean(slot_rates))

    decision_latency_s = float(np.mean(latencies)) if config.measure_latency else 0.0
    return np.asarray(episode_means), decision_latency_s


def _curve_frame(mean_rates: Sequence[float], losses: Sequence[float], epsilons: Sequence[float]) -> pd.DataFrame:
    return pd.DataFrame(
        dict(
            episode=np.arange(len(mean_rates)),
            mean_rate_per_user=np.asarray(mean_rates, dtype=np.float64),
            loss=np.asarray(losses, dtype=np.float64),
            epsilon=np.asarray(epsilons, dtype=np.float64),
        ),
        columns=list(CURVE_COLUMNS),
    )


def smooth_curve(curve: pd.DataFrame, window: int) -> pd.DataFrame:
    """Block means of every curve column; the `block` column counts blocks of `window` episodes."""
    smoothed = {column: smooth(curve[column].to_numpy(), window) for column in CURVE_COLUMNS[1:]}
    n_blocks = len(smoothed["mean_rate_per_user"])
    return pd.DataFrame(dict(block=np.arange(n_blocks), **smoothed), columns=["block", *CURVE_COLUMNS[1:]])


def write_run_outputs(curve: pd.DataFrame, summary: SummaryRecord, smoothing_window: int, output_folder) -> Path:
    output_folder = Path(output_folder)
    output_folder.mkdir(parents=True, exist_ok=True)
    curve.to_csv(output_folder / "curve.csv", index=False)
    smooth_curve(curve, window=smoothing_window).to_csv(output_folder / "curve_smoothed.csv", index=False)
    dump_dict_to_json(asdict(summary), file_path=output_folder / "summary.json", encoder=ExperimentJSONEncoder)
    return output_folder


def run_experiment(
    config: ExperimentConfig, output_folder: OptionalFolderPathType = None, verbose: bool = False
) -> Tuple[pd.DataFrame, SummaryRecord]:
    """
    Train (learning algorithms only), evaluate and summarize one configuration.

    Parameters
    ----------
    config : ExperimentConfig
    output_folder : FolderPathType, optional
        Where `curve.csv`, `curve_smoothed.csv` and `summary.json` are written. Defaults to the configuration's
        `output_folder`; nothing is written when both are None.
    verbose : bool, default: False
        Show progress bars.

    Returns
    -------
    curve : pandas.DataFrame
        One row per training episode with the columns episode, mean_rate_per_user, loss and epsilon.
        Baselines do not train, so their curve repeats the evaluation mean with zero loss and exploration.
    summary : SummaryRecord
    """
    output_folder = output_folder if output_folder is not None else config.output_folder
    if config.is_learning:
        checkpoint_folder = None
        if config.save_checkpoints and output_folder is not None:
            checkpoint_folder = Path(output_folder) / "checkpoints"
        learners, metrics, plan = train(config, verbose=verbose, checkpoint_folder=checkpoint_folder)
        episode_means, latency = evaluate(config, learners=learners, verbose=verbose)
        curve = _curve_frame(metrics.mean_rate_per_user, metrics.mean_loss, metrics.epsilons)
        overhead = comm_overhead(metrics, plan, n_episodes=config.n_episodes)
        label = algorithm_label(config.algorithm, config.mode)
    else:
        episode_means, latency = evaluate(config, verbose=verbose)
        flat = np.full(shape=config.n_episodes, fill_value=np.mean(episode_means))
        curve = _curve_frame(flat, np.zeros_like(flat), np.zeros_like(flat))
        overhead = BASELINE_COMM_OVERHEAD[config.algorithm]
        label = algorithm_label(config.algorithm)

    summary = SummaryRecord(
        algorithm=label,
        mean_rate_per_user=float(np.mean(episode_means)),
        std_rate_per_user=float(np.std(episode_means)),
        decision_latency_s=latency,
        comm_overhead=float(overhead),
    )
    logger.info(
        f"{label}: mean rate per user {summary.mean_rate_per_user:.4f} bit/s/Hz "
        f"(std {summary.std_rate_per_user:.4f}) over {config.eval_episodes} evaluation episodes."
    )
    if output_folder is not None:
        write_run_outputs(curve, summary, smoothing_window=config.smoothing_window, output_folder=output_folder)
    return curve, summary


def compare_modes(
    base_config: ExperimentConfig, output_folder: OptionalFolderPathType = None, verbose: bool = False
) -> dict:
    """
    Train the distributed, centralized and federated variants of one algorithm with identical seeds.

    The federated mode runs once per entry of `compare_aggregation_periods`. The result holds the aligned
    per-episode curves, their block means and the mean over the final smoothing window. Convergence is located on
    blocks of `convergence_window` episodes: the first block whose mean reaches 90% of the final window mean.
    The communication overhead of each run completes the record.
    """
    if not base_config.is_learning:
        raise ExperimentConfigError("algorithm", "mode comparisons need a learning algorithm ('dqn' or 'pg').")
    runs = [("distributed", dict(mode="distributed")), ("centralized", dict(mode="centralized"))]
    runs += [
        (f"federated_ag{period}", dict(mode="federated", aggregation_period=period))
        for period in base_config.compare_aggregation_periods
    ]

    window = base_config.smoothing_window
    comparison = dict(
        algorithm=base_config.algorithm,
        n_episodes=base_config.n_episodes,
        seed=base_config.seed,
        smoothing_window=window,
        convergence_window=base_config.convergence_window,
        series=dict(),
        smoothed=dict(),
        final_window_mean=dict(),
        convergence_episode=dict(),
        comm_overhead=dict(),
    )
    for label, overrides in runs:
        _, metrics, plan = train(base_config.with_overrides(**overrides), verbose=verbose)
        mean_rates = np.asarray(metrics.mean_rate_per_user)
        comparison["series"][label] = mean_rates.tolist()
        comparison["smoothed"][label] = smooth(mean_rates, window=window).tolist()
        comparison["final_window_mean"][label] = float(np.mean(mean_rates[-window:]))
        comparison["convergence_episode"][label] = convergence_episode(
            mean_rates, window=base_config.convergence_window, final_window=window
        )
        comparison["comm_overhead"][label] = comm_overhead(metrics, plan, n_episodes=base_config.n_episodes)

    if output_folder is not None:
        dump_dict_to_json(comparison, file_path=Path(output_folder) / "comparison.json", encoder=ExperimentJSONEncoder)
    return comparison


def sweep_network_size(
    base_config: ExperimentConfig,
    grid_sides: Optional[Sequence[int]] = None,
    output_folder: OptionalFolderPathType = None,
    verbose: bool = False,
) -> dict:
    """
    Federated against distributed evaluation rate for growing square grids.

    The relative gain of each size is federated / distributed - 1.
    """
    if not base_config.is_learning:
        raise ExperimentConfigError("algorithm", "network size sweeps need a learning algorithm ('dqn' or 'pg').")
    if not isinstance(base_config.topology.users_per_cell, (int, np.integer)):
        raise ExperimentConfigError("users_per_cell", "a network size sweep needs one user count for every cell.")
    grid_sides = list(base_config.sweep_grid_sides if grid_sides is None else grid_sides)

    sweep = dict(algorithm=base_config.algorithm, grid_sides=grid_sides, n_cells=[], federated=[], distributed=[])
    for grid_side in tqdm(grid_sides, desc="Sweeping network sizes", disable=not verbose):
        for mode in ("federated", "distributed"):
            _, summary = run_experiment(base_config.with_overrides(grid_side=grid_side, mode=mode, output_folder=None))
            sweep[mode].append(summary.mean_rate_per_user)
        sweep["n_cells"].append(grid_side**2)
    sweep["relative_gain"] = [
        federated / distributed - 1.0 for federated, distributed in zip(sweep["federated"], sweep["distributed"])
    ]

    if output_folder is not None:
        dump_dict_to_json(sweep, file_path=Path(output_folder) / "sweep.json", encoder=ExperimentJSONEncoder)
    return sweep


def benchmark(
    base_config: ExperimentConfig, output_folder: OptionalFolderPathType = None, verbose: bool = False
) -> Dict[str, dict]:
    """Summary records of the six learned variants and the two baselines on one configuration."""
    records = dict()
    for algorithm, mode in tqdm(BENCHMARK_COLUMNS, desc="Benchmarking", disable=not verbose):
        overrides = dict(algorithm=algorithm, output_folder=None)
        if mode is not None:
            overrides["mode"] = mode
        _, summary = run_experiment(base_config.with_overrides(**overrides))
        records[summary.algorithm] = asdict(summary)

    if output_folder is not None:
        dump_dict_to_json(records, file_path=Path(output_folder) / "benchmark.json", encoder=ExperimentJSONEncoder)
    return records


def baseline_allocation(config: ExperimentConfig) -> dict:
    """Allocation and sum rate of a baseline on the first slot of one fresh evaluation-stream instance."""
    if config.is_learning:
        raise ExperimentConfigError("algorithm", "expected a baseline ('wmmse' or 'maxpower').")
    _, eval_sequence, _, _ = _seed_sequences(config.seed)
    env = PowerControlEnv(topology_config=config.topology, env_config=config.env, seed=eval_sequence)
    env.reset()
    p_max, noise = config.env.p_max_w, config.env.noise_w
    if config.algorithm == "wmmse":
        powers = wmmse(
            env.gains,
            P_max=p_max,
            noise=noise,
            tol=config.wmmse_tol,
            max_iter=config.wmmse_max_iter,
            user_mask=env.user_mask,
        )
    else:
        powers = max_power(env.topology, P_max=p_max)
    return dict(
        algorithm=algorithm_label(config.algorithm),
        allocation_w=powers,
        sum_rate=network_sum_rate(rates(g=env.gains, p=powers, noise=noise)),
    )


def _exit_on_error(command):
    """Map configuration errors to exit code 1 and I/O failures to exit code 2."""

    @functools.wraps(command)
    def wrapper(*args, **kwargs):
        try:
            return command(*args, **kwargs)
        except ExperimentConfigError as exception:
            click.echo(f"Configuration error: {exception}", err=True)
            sys.exit(1)
        except OSError as exception:
            click.echo(f"I/O error: {exception}", err=True)
            sys.exit(2)

    return wrapper


def _parse_assignments(assignments: Sequence[str]) -> dict:
    overrides = dict()
    for assignment in assignments:
        key, separator, value = assignment.partition("=")
        if not separator or not key:
            raise ExperimentConfigError(field=assignment, message="overrides must be written as KEY=VALUE.")
        overrides[key.strip()] = yaml.load(value, Loader=ConfigLoader)
    return overrides


def _configure(config_path, assignments, verbose, **flags) -> ExperimentConfig:
    if verbose:
        logging.basicConfig(level=logging.INFO)
    return load_experiment_config(file_path=config_path, assignments=_parse_assignments(assignments), **flags)


_config_option = click.option(
    "--config", "config_path", default=None, type=click.Path(dir_okay=False), help="Flat .yml or .json config file."
)
_set_option = click.option(
    "--set", "assignments", multiple=True, metavar="KEY=VALUE", help="Override any configuration key; repeatable."
)
_out_option = click.option(
    "--out", "output_folder", default=None, type=click.Path(file_okay=False), help="Folder for the outputs."
)
_verbose_option = click.option("--verbose", is_flag=True, help="Log progress and show progress bars.")


@click.group()
def fedpowerctl_cli():
    """Train, compare and benchmark downlink power control policies."""


@fedpowerctl_cli.command(name="train")
@_config_option
@click.option("--algo", "algorithm", type=click.Choice(LEARNING_ALGORITHMS), default=None)
@click.option("--mode", type=click.Choice(TRAINING_MODES), default=None)
@click.option("--agg-period", "aggregation_period", type=int, default=None)
@click.option("--episodes", "n_episodes", type=int, default=None)
@click.option("--seed", type=int, default=None)
@_out_option
@_set_option
@_verbose_option
@_exit_on_error
def train_cli(config_path, assignments, verbose, **flags):
    """Train one learning configuration, evaluate it and write curve.csv and summary.json."""
    config = _configure(config_path, assignments, verbose, **flags)
    _, summary = run_experiment(config, verbose=verbose)
    click.echo(yaml.safe_dump(asdict(summary), sort_keys=False))


@fedpowerctl_cli.command(name="baseline")
@click.option("--algo", "algorithm", type=click.Choice(("wmmse", "maxpower")), required=True)
@_config_option
@click.option("--seed", type=int, default=None)
@_out_option
@_set_option
@_verbose_option
@_exit_on_error
def baseline_cli(config_path, assignments, verbose, **flags):
    """Evaluate a non-learning baseline and write its summary and one example allocation."""
    config = _configure(config_path, assignments, verbose, **flags)
    _, summary = run_experiment(config, verbose=verbose)
    if config.output_folder is not None:
        dump_dict_to_json(
            baseline_allocation(config),
            file_path=Path(config.output_folder) / "allocation.json",
            encoder=ExperimentJSONEncoder,
        )
    click.echo(yaml.safe_dump(asdict(summary), sort_keys=False))


@fedpowerctl_cli.command(name="compare")
@_config_option
@click.option("--algo", "algorithm", type=click.Choice(LEARNING_ALGORITHMS), default=None)
@click.option("--seed", type=int, default=None)
@_out_option
@_set_option
@_verbose_option
@_exit_on_error
def compare_cli(config_path, assignments, verbose, **flags):
    """Compare distributed, centralized and federated training and write comparison.json."""
    config = _configure(config_path, assignments, verbose, **flags)
    comparison = compare_modes(config, output_folder=config.output_folder, verbose=verbose)
    click.echo(yaml.safe_dump(comparison["final_window_mean"], sort_keys=False))


@fedpowerctl_cli.command(name="sweep-cells")
@_config_option
@click.option("--grid-sides", default=None, help="Comma separated grid sides, e.g. 2,3,4.")
@_out_option
@_set_option
@_verbose_option
@_exit_on_error
def sweep_cells_cli(config_path, assignments, verbose, grid_sides, **flags):
    """Federated gain over distributed training for growing networks; writes sweep.json."""
    if grid_sides is not None:
        flags["sweep_grid_sides"] = [int(side) for side in grid_sides.split(",")]
    config = _configure(config_path, assignments, verbose, **flags)
    sweep = sweep_network_size(config, output_folder=config.output_folder, verbose=verbose)
    click.echo(yaml.safe_dump(dict(n_cells=sweep["n_cells"], relative_gain=sweep["relative_gain"]), sort_keys=False))


@fedpowerctl_cli.command(name="benchmark")
@_config_option
@click.option("--seed", type=int, default=None)
@_out_option
@_set_option
@_verbose_option
@_exit_on_error
def benchmark_cli(config_path, assignments, verbose, **flags):
    """Summaries of all learned variants and both baselines; writes benchmark.json."""
    config = _configure(config_path, assignments, verbose, **flags)
    records = benchmark(config, output_folder=config.output_folder, verbose=verbose)
    click.echo(yaml.safe_dump(records, sort_keys=False))


@fedpowerctl_cli.command(name="show-config")
@_config_option
@_set_option
@_exit_on_error
def show_config_cli(config_path, assignments):
    """Print the resolved configuration with every default filled in."""
    config = _configure(config_path, assignments, verbose=False)
    click.echo(yaml.safe_dump(config.to_dict(), sort_keys=True))
