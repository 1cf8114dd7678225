"""Tabular MDP container, validation, and dense value iteration.

Conventions used throughout the package:

* A finite MDP with ``n_states`` states and ``n_actions`` actions stores its
  transition kernel as a single stacked matrix of shape
  ``(n_states * n_actions, n_states)``: row ``action * n_states + state``
  holds the distribution over successor states for that state/action pair
  (action-major flattening).  Reward vectors use the same indexing.
* Deterministic policies are arrays mapping each state to the lowest-index
  maximizing action (ties break toward the smaller action index).

``dense_value_iteration`` here is the reference solver: it works on the dense
stacked matrix with ordinary matrix products and is used as the independent
oracle for the sparse solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

#: Tolerance applied to row sums when checking stochasticity.  Deviations
#: beyond this are treated as modeling errors, never silently renormalized.
ROW_SUM_TOLERANCE = 1e-9

#: Hard iteration cap for the solvers.
DEFAULT_MAX_ITERATIONS = 10**6


class ConvergenceError(RuntimeError):
    """Raised when value iteration hits its iteration cap before converging.

    Carries the last iterate so callers can inspect (or keep) partial
    progress.
    """

    def __init__(self, message, values, iterations):
        super().__init__(message)
        self.values = values
        self.iterations = iterations


def flat_index(state, action, n_states):
    """Flatten a (state, action) pair into a stacked row index.

    The layout is action-major: all rows for action 0 come first, then all
    rows for action 1, and so on, so the index is
    ``action * n_states + state``.

    Parameters
    ----------
    state : int
        State index, ``0 <= state < n_states``.
    action : int
        Action index, ``>= 0``.
    n_states : int
        Number of states in the MDP.

    Returns
    -------
    int
    """
    if n_states < 1:
        raise ValueError(f"n_states must be >= 1, got {n_states}")
    if not 0 <= state < n_states:
        raise ValueError(f"state {state} out of range [0, {n_states})")
    if action < 0:
        raise ValueError(f"action must be >= 0, got {action}")
    return action * n_states + state


@dataclass(frozen=True)
class MdpSpec:
    """A finite MDP in stacked action-major form.

    Attributes
    ----------
    n_states, n_actions : int
        Dimensions of the state and action sets.
    rewards : ndarray, shape (n_states * n_actions,)
        Immediate reward for each (state, action) row.
    transitions : ndarray, shape (n_states * n_actions, n_states)
        Stacked transition matrix; each row should be a probability
        distribution over successor states (checked by :func:`validate`,
        enforced by the solvers).
    discount : float
        Discount factor in [0, 1).
    tolerance : float
        Convergence threshold on the sup-norm of successive value iterates.
    """

    n_states: int
    n_actions: int
    rewards: np.ndarray
    transitions: np.ndarray
    discount: float = 0.95
    tolerance: float = 1e-6

    def __post_init__(self):
        if self.n_states < 1 or self.n_actions < 1:
            raise ValueError("n_states and n_actions must be >= 1")
        if not 0.0 <= self.discount < 1.0:
            raise ValueError(f"discount must be in [0, 1), got {self.discount}")
        if not self.tolerance > 0.0:
            raise ValueError(f"tolerance must be > 0, got {self.tolerance}")
        rewards = np.asarray(self.rewards, dtype=float)
        transitions = np.asarray(self.transitions, dtype=float)
        n_rows = self.n_states * self.n_actions
        if rewards.shape != (n_rows,):
            raise ValueError(
                f"rewards must have shape ({n_rows},), got {rewards.shape}"
            )
        if transitions.shape != (n_rows, self.n_states):
            raise ValueError(
                "transitions must have shape "
                f"({n_rows}, {self.n_states}), got {transitions.shape}"
            )
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "transitions", transitions)


@dataclass
class ViolationReport:
    """Outcome of :func:`validate`: ``ok`` plus one message per problem."""

    ok: bool
    messages: list = field(default_factory=list)


def validate(spec):
    """Check an :class:`MdpSpec` for structural problems.

    Reports every stacked row whose transition mass deviates from 1 by more
    than ``ROW_SUM_TOLERANCE``, any negative transition entry, and NaNs in
    either the transition matrix or the reward vector.  Nothing is repaired;
    the report is purely diagnostic.

    Returns
    -------
    ViolationReport
    """
    messages = []
    if np.isnan(spec.rewards).any():
        bad = np.flatnonzero(np.isnan(spec.rewards))
        messages.append(f"rewards contain NaN at rows {bad.tolist()}")
    if np.isnan(spec.transitions).any():
        rows = np.unique(np.nonzero(np.isnan(spec.transitions))[0])
        messages.append(f"transitions contain NaN in rows {rows.tolist()}")
    else:
        neg_rows = np.unique(np.nonzero(spec.transitions < 0.0)[0])
        if neg_rows.size:
            messages.append(
                f"transitions contain negative entries in rows {neg_rows.tolist()}"
            )
        row_sums = spec.transitions.sum(axis=1)
        off = np.flatnonzero(np.abs(row_sums - 1.0) > ROW_SUM_TOLERANCE)
        for row in off.tolist():
            messages.append(
                f"row {row} sums to {row_sums[row]!r}, expected 1 "
                f"within {ROW_SUM_TOLERANCE}"
            )
    return ViolationReport(ok=not messages, messages=messages)


def dense_value_iteration(spec, max_iterations=DEFAULT_MAX_ITERATIONS):
    """Solve an MDP by dense value iteration.

    Starts from the all-zero value function and repeats

        Q = R + discount * (M @ V)
        V', policy = row-wise max / argmax of Q over actions

    until the sup-norm change drops below ``spec.tolerance``.  Ties in the
    argmax resolve to the lowest action index.

    Parameters
    ----------
    spec : MdpSpec
    max_iterations : int
        Hard cap; exceeding it raises :class:`ConvergenceError` with the last
        iterate attached.

    Returns
    -------
    (values, policy, iterations)
        ``values`` is the converged value function (shape ``(n_states,)``),
        ``policy`` the greedy policy against the final backup (int array),
        ``iterations`` the number of backups performed.

    Raises
    ------
    ValueError
        If the spec fails :func:`validate`.
    ConvergenceError
        If the iteration cap is reached first.
    """
    report = validate(spec)
    if not report.ok:
        raise ValueError("invalid MDP: " + "; ".join(report.messages))

    m = spec.transitions
    r = spec.rewards
    beta = spec.discount
    v = np.zeros(spec.n_states)
    for iteration in range(1, max_iterations + 1):
        q_stacked = (r + beta * (m @ v)).reshape(spec.n_actions, spec.n_states)
        v_new = q_stacked.max(axis=0)
        delta = float(np.max(np.abs(v_new - v)))
        v = v_new
        if delta < spec.tolerance:
            policy = q_stacked.argmax(axis=0)
            return v, policy, iteration
    raise ConvergenceError(
        f"value iteration did not converge within {max_iterations} iterations",
        values=v,
        iterations=max_iterations,
    )
