"""The teacher agent: a goal-selection MDP over the user-goal corpus.

The teacher's Q-head has one output per corpus goal; curriculum phases
restrict selection by masking, so values learned in earlier phases carry
over.  Its reward is the over-repetition term plus the change in the
student's episode total reward on the chosen goal.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .domain import GoalCorpus, TIERS
from .neural import QFunction
from .student import FAILURE_PENALTY

# Fixed-size window of recent student episodes summarized in the state.
SUMMARY_WINDOW = 20

# [success rate, mean reward / 80] + 2 * [goal id norm + tier one-hot] + 2 scalars
TEACHER_STATE_DIM = 2 + 2 * (1 + len(TIERS)) + 2


class TeacherError(Exception):
    pass


class GoalRewardTable:
    """Last episode total reward per goal; never-sampled goals read as -40."""

    def __init__(self, default: float = FAILURE_PENALTY):
        self.default = default
        self._x: dict[int, float] = {}

    def get(self, goal_id: int) -> float:
        return self._x.get(goal_id, self.default)

    def put(self, goal_id: int, x_now: float) -> None:
        self._x[goal_id] = x_now


def teacher_reward(r_or: float, x_now: float, table: GoalRewardTable,
                   goal_id: int) -> tuple[float, float]:
    """r = r_or + x_now - x_prev, then the table advances to x_now.

    Returns (r, x_prev) so callers can log the full decomposition.
    """
    x_prev = table.get(goal_id)
    table.put(goal_id, x_now)
    return r_or + x_now - x_prev, x_prev


@dataclass
class GoalSnapshot:
    goal_id: int
    tier: str
    param_scalar: float


@dataclass
class TeacherStateBuilder:
    """Assembles the teacher state vector from recent student outcomes."""

    n_goals: int
    recent: deque = field(default_factory=lambda: deque(maxlen=SUMMARY_WINDOW))
    current: GoalSnapshot | None = None
    previous: GoalSnapshot | None = None

    def record_episode(self, goal_id: int, tier: str, success: bool,
                       total_reward: float, param_scalar: float) -> None:
        self.recent.append((success, total_reward))
        self.previous = self.current
        self.current = GoalSnapshot(goal_id, tier, param_scalar)

    def _goal_block(self, vec: np.ndarray, offset: int,
                    snap: GoalSnapshot | None) -> None:
        if snap is None:
            return
        denom = max(self.n_goals - 1, 1)
        vec[offset] = snap.goal_id / denom
        vec[offset + 1 + TIERS.index(snap.tier)] = 1.0

    def build(self) -> np.ndarray:
        vec = np.zeros(TEACHER_STATE_DIM)
        if self.recent:
            succ = [s for s, _ in self.recent]
            rewards = [r for _, r in self.recent]
            vec[0] = sum(succ) / len(succ)
            vec[1] = float(np.mean(rewards)) / 80.0
        block = 1 + len(TIERS)
        self._goal_block(vec, 2, self.current)
        self._goal_block(vec, 2 + block, self.previous)
        if self.current is not None:
            vec[2 + 2 * block] = self.current.param_scalar
        if self.previous is not None:
            vec[2 + 2 * block + 1] = self.previous.param_scalar
        return vec


def teacher_act(q: QFunction, state: np.ndarray, goal_ids,
                epsilon: float, rng: np.random.Generator) -> int:
    """Epsilon-greedy over the Q-head restricted to the active goal set."""
    ids = list(goal_ids)
    if not ids:
        raise TeacherError("empty goal set")
    if epsilon > 0.0 and rng.random() < epsilon:
        return ids[int(rng.integers(len(ids)))]
    values = q.forward(state)
    masked = values[ids]
    return ids[int(np.argmax(masked))]


def teacher_train_step(q: QFunction, buffer, rng: np.random.Generator,
                       gamma: float = 0.9, batch_size: int = 16) -> float | None:
    """One minibatch TD update on the teacher buffer; None when underfull."""
    batch = buffer.sample(batch_size, rng)
    if batch is None:
        return None
    return q.td_train_step(batch, gamma)


def make_teacher_q(corpus: GoalCorpus, hidden_dim: int = 80,
                   learning_rate: float = 0.001, clip_norm: float = 1.0,
                   rng: np.random.Generator | None = None) -> QFunction:
    return QFunction(TEACHER_STATE_DIM, len(corpus), hidden_dim,
                     learning_rate, clip_norm, rng)
