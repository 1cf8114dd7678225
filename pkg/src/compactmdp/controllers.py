"""Runtime controllers for the sensor node.

Three policies share one frame-stepped interface (``act`` then ``observe``):

* :class:`ThresholdController` — the classic duty-cycling rule: connect when
  the queue reaches a threshold, stay up until it is empty.
* :class:`StructuredController` — keeps the transition model's design-time
  structure fixed and learns only the few free parameters (app-mode
  statistics and the attach delay), re-solving the MDP on a period.
* :class:`QLearningController` — model-free tabular Q-learning over the same
  state space, one learned value per state/action cell.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_MAX_ITERATIONS
from .node import (
    ACTION_OFF,
    ACTION_ON,
    M_CONNECTED,
    M_CONNECTING,
    M_OFF,
    N_ACTIONS,
    app_stm,
    build_mdp,
    floor_frames,
    rho_from_connect_time,
)
from .solver import svi_solve


def td_update(estimate, observation, alpha):
    """Exponential-forgetting update ``estimate*(1-alpha) + observation*alpha``."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError(f"alpha must be in (0, 1], got {alpha}")
    return estimate * (1.0 - alpha) + observation * alpha


@dataclass
class ParameterEstimates:
    """Runtime estimates of the learnable transition-model parameters.

    The structured controller learns exactly two things: the app-mode
    transition matrix ``sigma_hat`` (updated toward the one-hot observed
    transition every frame, rows kept stochastic) and the mean attach delay
    ``connect_time_hat`` (updated once per completed attach).  Everything else
    in the model is design-time structure.
    """

    sigma_hat: np.ndarray
    connect_time_hat: float
    alpha: float = 0.1
    frame_period: float = 0.1

    def __post_init__(self):
        self.sigma_hat = app_stm(self.sigma_hat).copy()
        if not 0.0 < self.alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {self.alpha}")
        if self.connect_time_hat < self.frame_period:
            raise ValueError("connect_time_hat must be at least one frame")

    @classmethod
    def from_config(cls, config, alpha=0.1):
        """Seed the estimates with the design-time priors."""
        return cls(
            sigma_hat=np.asarray(config.app_transition, dtype=float),
            connect_time_hat=config.connect_time,
            alpha=alpha,
            frame_period=config.frame_period,
        )

    @property
    def size(self):
        """Number of learned scalars: every sigma entry plus the attach delay."""
        return self.sigma_hat.size + 1

    def observe_app_transition(self, prev_mode, next_mode):
        """Blend the observed one-hot transition into ``sigma_hat``'s row."""
        row = self.sigma_hat[prev_mode]
        row *= 1.0 - self.alpha
        row[next_mode] += self.alpha
        row /= row.sum()

    def observe_connect_time(self, seconds):
        """Blend one measured attach duration into ``connect_time_hat``."""
        if seconds < self.frame_period:
            raise ValueError(f"attach duration {seconds} shorter than one frame")
        blended = td_update(self.connect_time_hat, seconds, self.alpha)
        self.connect_time_hat = max(blended, self.frame_period)

    def rho(self):
        """Attach completion probability implied by the current estimate."""
        return rho_from_connect_time(self.connect_time_hat, self.frame_period)


class ThresholdController:
    """Queue-threshold duty cycling.

    Requests the modem on when the queue has reached ``queue_threshold``
    packets, keeps it on while a transaction is in flight and packets remain,
    and drops back to off once the queue is empty.
    """

    def __init__(self, queue_threshold):
        if queue_threshold < 1:
            raise ValueError(f"queue_threshold must be >= 1, got {queue_threshold}")
        self.queue_threshold = queue_threshold

    def act(self, state, frame=0):
        if state.queue >= self.queue_threshold:
            return ACTION_ON
        if state.modem != M_OFF and state.queue > 0:
            return ACTION_ON
        return ACTION_OFF

    def observe(self, prev_state, action, reward, next_state, frame):
        return None


class StructuredController:
    """Model-learning controller: estimate the free parameters, re-solve, look up.

    Between solves the controller is a pure table lookup.  On a fixed period
    (including frame 0, using the design-time priors) it rebuilds the MDP from
    the current estimates and runs sparse value iteration.  If a solve fails
    the previous policy stays in force and ``solver_failed`` is set.
    """

    def __init__(self, config, solve_period=3600.0, alpha=0.1,
                 max_iterations=DEFAULT_MAX_ITERATIONS):
        config.validate()
        self.config = config
        self.solve_period_frames = floor_frames(solve_period, config.frame_period)
        if self.solve_period_frames < 1:
            raise ValueError(f"solve_period {solve_period} shorter than one frame")
        self.max_iterations = max_iterations
        self.estimates = ParameterEstimates.from_config(config, alpha=alpha)
        # All-off until the first successful solve.
        self.policy = [ACTION_OFF] * config.n_states
        self.solve_count = 0
        self.total_kernel_ops = 0
        self.last_result = None
        self.solver_failed = False
        self._queue_states = config.queue_states
        self._next_solve_frame = 0
        self._connecting_frames = 0

    def resolve_policy(self):
        """Rebuild the MDP from current estimates and re-solve it."""
        try:
            spec = build_mdp(
                self.config,
                sigma=self.estimates.sigma_hat,
                rho=self.estimates.rho(),
            )
            result = svi_solve(spec, max_iterations=self.max_iterations)
        except Exception:
            self.solver_failed = True
            return
        self.policy = result.policy.tolist()
        self.last_result = result
        self.solve_count += 1
        self.total_kernel_ops += result.kernel_op_count

    def act(self, state, frame=0):
        if frame >= self._next_solve_frame:
            self.resolve_policy()
            self._next_solve_frame = frame + self.solve_period_frames
        return self.policy[state.flat(self._queue_states)]

    def observe(self, prev_state, action, reward, next_state, frame):
        self.estimates.observe_app_transition(prev_state.app_mode, next_state.app_mode)
        # Measure attach durations by counting observed CONNECTING frames.
        if next_state.modem == M_CONNECTING:
            self._connecting_frames += 1
        elif (
            next_state.modem == M_CONNECTED
            and prev_state.modem == M_CONNECTING
            and self._connecting_frames > 0
        ):
            self.estimates.observe_connect_time(
                self._connecting_frames * self.config.frame_period
            )
            self._connecting_frames = 0
        else:
            self._connecting_frames = 0


class QLearningController:
    """Tabular Q-learning with epsilon-greedy exploration.

    The Q-table is flat action-major (same layout as the stacked MDP rows).
    Greedy ties resolve to the lowest action index, so an untrained table
    keeps the modem off.
    """

    def __init__(self, config, alpha=0.1, epsilon=0.05, discount=0.95,
                 epsilon_decay=1.0, seed=None, rng=None):
        config.validate()
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"alpha must be in (0, 1], got {alpha}")
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must be in [0, 1], got {epsilon}")
        if not 0.0 < epsilon_decay <= 1.0:
            raise ValueError(f"epsilon_decay must be in (0, 1], got {epsilon_decay}")
        if not 0.0 <= discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {discount}")
        self.config = config
        self.alpha = alpha
        self.epsilon = epsilon
        self.discount = discount
        self.epsilon_decay = epsilon_decay
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.n_states = config.n_states
        self.q = [0.0] * (self.n_states * N_ACTIONS)
        self.last_explored = False
        self._queue_states = config.queue_states

    def act(self, state, frame=0):
        if self.epsilon > 0.0 and self.rng.random() < self.epsilon:
            self.last_explored = True
            return int(self.rng.integers(N_ACTIONS))
        self.last_explored = False
        i = state.flat(self._queue_states)
        # Lowest index wins ties, matching the solver's greedy reduction.
        return ACTION_ON if self.q[self.n_states + i] > self.q[i] else ACTION_OFF

    def observe(self, prev_state, action, reward, next_state, frame):
        i_next = next_state.flat(self._queue_states)
        best_next = max(self.q[i_next], self.q[self.n_states + i_next])
        i = action * self.n_states + prev_state.flat(self._queue_states)
        self.q[i] += self.alpha * (reward + self.discount * best_next - self.q[i])
        if self.epsilon_decay < 1.0:
            self.epsilon *= self.epsilon_decay


def learnable_parameter_count(method, n_states, n_actions, theta_size=None):
    """Number of scalars a controller must learn at runtime.

    ``"ql"`` learns one Q-value per state/action cell.  ``"structured"``
    learns only its free transition-model parameters (``theta_size``; pass 0
    for a fully known model).  The threshold rule learns nothing.
    """
    if method == "ql":
        return n_states * n_actions
    if method == "structured":
        if theta_size is None:
            raise ValueError("structured count needs theta_size (0 if fully known)")
        return theta_size
    if method == "threshold":
        return 0
    raise ValueError(f"unknown method {method!r}")
