"""Frame-stepped node simulator, scenario schedule, sweeps, and MCU power model.

The simulator advances the true node exactly as the transition factors in
:mod:`compactmdp.node` describe: per frame the controller picks an action, the
modem moves (a real attach takes a deterministic ``floor(connect_time /
frame_period)`` frames), the application may emit a packet, and the queue
drains or absorbs.  Latency is tracked per packet from enqueue frame to
transmit frame; energy is tracked per modem transaction with the affine
transaction model.

Scenarios can change the true environment parameters mid-run (attach delay,
app-mode statistics, packet probabilities) through a piecewise-constant
schedule, which is what makes runtime learning worth measuring.

The power model at the bottom turns per-solve and per-frame energy costs into
average power draws and solves for the update period at which two controller
implementations break even.
"""

from __future__ import annotations

import csv
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .node import (
    ACTION_ON,
    M_CONNECTED,
    M_CONNECTING,
    M_OFF,
    SUPPLY_VOLTS,
    NodeConfig,
    NodeState,
    floor_frames,
)
from .controllers import (
    QLearningController,
    StructuredController,
    ThresholdController,
)

#: Fields of the true environment a schedule entry may change.
SCHEDULABLE_FIELDS = ("connect_time", "app_transition", "app_packet_prob")

#: Series labels used in sweep output: threshold rule, structured planner,
#: Q-learning.
SERIES_LABELS = ("on-off", "mdp", "ql")

#: Default sweep grids: reward-per-packet values for the learning controllers,
#: queue thresholds for the duty-cycling rule.
R2_SWEEP = (3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 100.0, 1000.0)
NQ_SWEEP = (1, 2, 3, 4, 5, 6, 7, 8, 9, 10)

DEFAULT_SEEDS = (0, 1, 2, 3, 4)

#: Per-frame exploration decay used by the sweeps (halves epsilon every ~12
#: simulated minutes), so Q-learning's late-run behavior reflects what it
#: learned rather than residual dithering.  Constructing a
#: :class:`~compactmdp.controllers.QLearningController` directly keeps epsilon
#: constant.
DEFAULT_EPSILON_DECAY = 0.9999


@dataclass(frozen=True)
class ScheduleChange:
    """One piecewise-constant change of a true environment parameter."""

    time: float
    parameter: str
    value: object

    def __post_init__(self):
        if self.parameter not in SCHEDULABLE_FIELDS:
            raise ValueError(
                f"schedule parameter {self.parameter!r} not one of {SCHEDULABLE_FIELDS}"
            )


@dataclass(frozen=True)
class Scenario:
    """A node config plus run length, seed, and environment schedule."""

    node: NodeConfig = field(default_factory=NodeConfig)
    duration_frames: int = 270000
    seed: int = 0
    schedule: tuple = ()

    @property
    def duration_seconds(self):
        return self.duration_frames * self.node.frame_period


@dataclass(frozen=True)
class SimMetrics:
    """Whole-run accounting for one simulation.

    ``packets_generated == packets_transmitted + packets_dropped +
    packets_queued_at_end`` holds exactly (integer conservation).

    ``transaction_energy`` uses the affine transaction model only;
    ``modem_current_energy`` is the separate current-draw integral, kept as a
    diagnostic and never mixed into ``energy_per_packet``.
    """

    frames: int
    packets_generated: int
    packets_transmitted: int
    packets_dropped: int
    packets_queued_at_end: int
    avg_latency: float
    energy_per_packet: float
    transaction_energy: float
    transactions: int
    modem_current_energy: float
    reward_total: float
    solver_invocations: int
    solver_kernel_ops: int


def simulate(scenario, controller):
    """Run one controller through one scenario; return :class:`SimMetrics`.

    Deterministic: the environment randomness is a pure function of
    ``scenario.seed`` and does not depend on the controller's choices, so two
    runs with equal (scenario, controller state, seeds) are bitwise identical,
    and different controllers at the same seed face the same arrival/mode
    sample path.
    """
    config = scenario.node.validate()
    frames = scenario.duration_frames
    if frames < 1:
        raise ValueError(f"duration_frames must be >= 1, got {frames}")
    frame_period = config.frame_period
    cap = config.capacity
    tx_per_frame = config.tx_per_frame
    c1, c2 = config.energy_c1, config.energy_c2
    w_current, w_tx, w_drop = config.reward_weights
    amps = [c * 1e-3 * config.current_scale for c in config.currents_ma]
    watts = [a * SUPPLY_VOLTS for a in amps]

    # True environment, then its schedule as {frame: [(parameter, value), ...]}.
    sigma_true = np.asarray(config.app_transition, dtype=float)
    packet_prob = list(config.app_packet_prob)
    connect_time = config.connect_time
    pending = {}
    for change in sorted(scenario.schedule, key=lambda c: c.time):
        at = max(0, floor_frames(change.time, frame_period))
        pending.setdefault(at, []).append((change.parameter, change.value))
    cum_sigma = np.cumsum(sigma_true, axis=1)

    # Environment randomness, drawn up front from the scenario seed alone.
    env_rng = np.random.default_rng(scenario.seed)
    u_mode = env_rng.random(frames)
    u_arrival = env_rng.random(frames)

    app = 0
    modem = M_OFF
    queue = deque()
    attach_frames_left = 0

    transaction_open = False
    transaction_packets = 0
    transactions = 0
    transaction_energy = 0.0
    current_energy = 0.0
    generated = transmitted = dropped = 0
    latency_frames = 0
    reward_total = 0.0

    for frame in range(frames):
        if frame in pending:
            for parameter, value in pending[frame]:
                if parameter == "connect_time":
                    connect_time = float(value)
                elif parameter == "app_transition":
                    sigma_true = np.asarray(value, dtype=float)
                    cum_sigma = np.cumsum(sigma_true, axis=1)
                else:
                    packet_prob = list(value)

        state = NodeState(app, len(queue), modem)
        action = controller.act(state, frame)

        # Modem first: the frame is spent in the state being entered.
        if action == ACTION_ON:
            if modem == M_OFF:
                modem = M_CONNECTING
                attach_frames_left = max(1, floor_frames(connect_time, frame_period))
                transaction_open = True
                transaction_packets = 0
            elif modem == M_CONNECTING:
                attach_frames_left -= 1
                if attach_frames_left == 0:
                    modem = M_CONNECTED
        elif modem != M_OFF:
            modem = M_OFF
            transactions += 1
            transaction_energy += (c1 - c2) + c2 * transaction_packets
            transaction_open = False

        # Application: mode step and packet emission use this frame's mode.
        arrived = u_arrival[frame] < packet_prob[app]
        app_next = int(np.searchsorted(cum_sigma[app], u_mode[frame], side="right"))

        n_tx = 0
        n_drop = 0
        if modem == M_CONNECTED:
            if arrived:
                generated += 1
                queue.append(frame)
            n_tx = min(len(queue), tx_per_frame)
            for _ in range(n_tx):
                latency_frames += frame - queue.popleft()
            transmitted += n_tx
            transaction_packets += n_tx
        elif arrived:
            generated += 1
            if len(queue) < cap:
                queue.append(frame)
            else:
                dropped += 1
                n_drop = 1

        current_energy += watts[modem] * frame_period
        frame_reward = w_current * amps[modem] + w_tx * n_tx + w_drop * n_drop
        reward_total += frame_reward

        controller.observe(
            state, action, frame_reward, NodeState(app_next, len(queue), modem), frame
        )
        app = app_next

    if transaction_open:
        transactions += 1
        transaction_energy += (c1 - c2) + c2 * transaction_packets

    avg_latency = (
        latency_frames * frame_period / transmitted if transmitted else float("nan")
    )
    energy_per_packet = (
        transaction_energy / transmitted if transmitted else float("nan")
    )
    return SimMetrics(
        frames=frames,
        packets_generated=generated,
        packets_transmitted=transmitted,
        packets_dropped=dropped,
        packets_queued_at_end=len(queue),
        avg_latency=avg_latency,
        energy_per_packet=energy_per_packet,
        transaction_energy=transaction_energy,
        transactions=transactions,
        modem_current_energy=current_energy,
        reward_total=reward_total,
        solver_invocations=getattr(controller, "solve_count", 0),
        solver_kernel_ops=getattr(controller, "total_kernel_ops", 0),
    )


def make_controller(series, config, value, seed=None, alpha=0.1, epsilon=0.05,
                    solve_period=3600.0, ql_discount=None,
                    epsilon_decay=DEFAULT_EPSILON_DECAY):
    """Build the controller for one sweep point.

    ``series`` follows :data:`SERIES_LABELS`: ``"on-off"`` takes a queue
    threshold, ``"mdp"`` and ``"ql"`` take the reward-per-packet weight (the
    config's middle reward weight is replaced by ``value``).
    """
    if series == "on-off":
        return ThresholdController(int(value)), config
    w1, _, w3 = config.reward_weights
    tuned = replace(config, reward_weights=(w1, float(value), w3))
    if series == "mdp":
        return StructuredController(tuned, solve_period=solve_period, alpha=alpha), tuned
    if series == "ql":
        discount = config.discount if ql_discount is None else ql_discount
        # Exploration stream is decoupled from the environment stream, which
        # uses the bare seed.
        return (
            QLearningController(
                tuned,
                alpha=alpha,
                epsilon=epsilon,
                discount=discount,
                epsilon_decay=epsilon_decay,
                seed=((0 if seed is None else seed), 1),
            ),
            tuned,
        )
    raise ValueError(f"unknown series {series!r}; expected one of {SERIES_LABELS}")


@dataclass(frozen=True)
class SweepPoint:
    """Seed-averaged metrics for one (series, parameter value) pair."""

    series: str
    parameter: str
    value: float
    seeds: int
    avg_latency: float
    energy_per_packet: float
    packets_generated: float
    packets_transmitted: float
    packets_dropped: float
    reward_total: float


def sweep_series(scenario, series, values, seeds=DEFAULT_SEEDS, **controller_kwargs):
    """Run one series over its parameter grid, averaging metrics over seeds."""
    parameter = "queue_threshold" if series == "on-off" else "tx_reward"
    points = []
    for value in values:
        runs = []
        for seed in seeds:
            controller, tuned = make_controller(
                series, scenario.node, value, seed=seed, **controller_kwargs
            )
            run_scenario = replace(scenario, node=tuned, seed=seed)
            runs.append(simulate(run_scenario, controller))
        points.append(
            SweepPoint(
                series=series,
                parameter=parameter,
                value=float(value),
                seeds=len(seeds),
                avg_latency=float(np.mean([r.avg_latency for r in runs])),
                energy_per_packet=float(np.mean([r.energy_per_packet for r in runs])),
                packets_generated=float(np.mean([r.packets_generated for r in runs])),
                packets_transmitted=float(np.mean([r.packets_transmitted for r in runs])),
                packets_dropped=float(np.mean([r.packets_dropped for r in runs])),
                reward_total=float(np.mean([r.reward_total for r in runs])),
            )
        )
    return points


def pareto_sweep(scenario, series=SERIES_LABELS, r2_values=R2_SWEEP,
                 nq_values=NQ_SWEEP, seeds=DEFAULT_SEEDS, **controller_kwargs):
    """Latency/energy trade-off sweep for the requested series.

    The learning controllers sweep the reward-per-packet weight; the threshold
    rule sweeps its queue threshold.  Returns the concatenated
    :class:`SweepPoint` list.
    """
    points = []
    for label in series:
        values = nq_values if label == "on-off" else r2_values
        points.extend(
            sweep_series(scenario, label, values, seeds=seeds, **controller_kwargs)
        )
    return points


SWEEP_CSV_COLUMNS = (
    "series",
    "parameter",
    "value",
    "seeds",
    "avg_latency_s",
    "energy_per_packet_j",
    "packets_generated",
    "packets_transmitted",
    "packets_dropped",
    "reward_total",
)


def _fmt(x):
    return format(x, ".6g")


def write_sweep_csv(points, stream):
    """Write sweep points as CSV: fixed column order, 6 significant digits."""
    writer = csv.writer(stream)
    writer.writerow(SWEEP_CSV_COLUMNS)
    for p in points:
        writer.writerow(
            [
                p.series,
                p.parameter,
                _fmt(p.value),
                p.seeds,
                _fmt(p.avg_latency),
                _fmt(p.energy_per_packet),
                _fmt(p.packets_generated),
                _fmt(p.packets_transmitted),
                _fmt(p.packets_dropped),
                _fmt(p.reward_total),
            ]
        )


# --- MCU power model ---------------------------------------------------------

#: Sleep floor fitted from bench measurements (a few microamps of always-on
#: draw at the low-voltage rail).
SLEEP_POWER = 8.2e-6


@dataclass(frozen=True)
class PowerModel:
    """Energy costs of running one controller on the target MCU.

    ``solver_cost`` is joules per policy update (0 for methods with no
    solver), ``frame_cost`` joules per per-frame control iteration, and
    ``sleep_power`` the always-on floor in watts.
    """

    solver_cost: float
    frame_cost: float
    sleep_power: float = SLEEP_POWER


#: Bench figures for a Cortex-M4F-class MCU: sparse solve, dense solve, and a
#: Q-learning step, plus the shared per-frame table-lookup cost.
MCU_SVI = PowerModel(solver_cost=0.187, frame_cost=117e-9)
MCU_DENSE_VI = PowerModel(solver_cost=1.67, frame_cost=117e-9)
MCU_QL = PowerModel(solver_cost=0.0, frame_cost=7.06e-6)

REFERENCE_POWER_MODELS = {
    "svi": MCU_SVI,
    "dense-vi": MCU_DENSE_VI,
    "ql": MCU_QL,
}


def average_power(model, update_period=3600.0, frame_period=0.1):
    """Average controller power: solver amortized over its period, frame cost
    amortized over the frame, plus the sleep floor."""
    if frame_period <= 0:
        raise ValueError(f"frame_period must be > 0, got {frame_period}")
    solver_power = 0.0
    if model.solver_cost > 0:
        if update_period is None or update_period <= 0:
            raise ValueError(
                "update_period must be > 0 for a model with solver cost"
            )
        solver_power = model.solver_cost / update_period
    return solver_power + model.frame_cost / frame_period + model.sleep_power


def crossover_period(a, b, frame_period=0.1):
    """Update period at which models ``a`` and ``b`` draw equal average power.

    Solves ``average_power(a, T) == average_power(b, T)`` for ``T``.  Returns
    ``None`` when there is no positive crossover (equal solver costs, or the
    cheaper-solver side is also cheaper per frame).
    """
    numerator = a.solver_cost - b.solver_cost
    denominator = (b.frame_cost - a.frame_cost) / frame_period + (
        b.sleep_power - a.sleep_power
    )
    if numerator == 0.0 or denominator == 0.0:
        return None
    period = numerator / denominator
    return period if period > 0 else None
