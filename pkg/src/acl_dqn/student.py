"""The student dialogue agent: featurization, action set, rewards, episodes."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .domain import ONTOLOGY, ActType, DialogueAct, UserGoal, inform_act, request_act
from .neural import QFunction
from .replay import Transition
from .user_sim import (
    DialogueContext,
    KnowledgeBase,
    MAX_TURNS,
    ONGOING,
    SUCCESS,
    rule_agent_act,
    session_reset,
    session_step,
)

# Reward constants: success bonus 2L, failure penalty -L, -1 each turn.
TURN_PENALTY = -1.0
SUCCESS_BONUS = 2.0 * MAX_TURNS
FAILURE_PENALTY = -float(MAX_TURNS)


def build_action_set() -> tuple[tuple[str, str | None], ...]:
    """Fixed-order system actions; index = Q-output index."""
    actions: list[tuple[str, str | None]] = []
    for slot in ONTOLOGY:
        actions.append(("request", slot))
    for slot in ONTOLOGY:
        actions.append(("inform", slot))
    actions.append(("confirm_question", None))
    actions.append(("confirm_answer", None))
    actions.append(("book", None))
    actions.append(("closing", None))
    actions.append(("greeting", None))
    return tuple(actions)


SYSTEM_ACTIONS = build_action_set()
N_ACTIONS = len(SYSTEM_ACTIONS)
_ACT_TYPES = [t.value for t in ActType]

# Feature layout: user act block (11 + 9), system act block (11 + 9),
# per-slot belief flags (constraint known / request open / request answered)
# plus three belief summaries (any open, all answered, open fraction),
# turn scalar + one-hot over 40 buckets, KB count scalar.
N_SLOTS = len(ONTOLOGY)
STATE_DIM = (len(_ACT_TYPES) + N_SLOTS) * 2 + 3 * N_SLOTS + 3 + 1 + MAX_TURNS + 1


def _act_block(vec: np.ndarray, offset: int, act: DialogueAct | None) -> None:
    if act is None:
        return
    vec[offset + _ACT_TYPES.index(act.act_type.value)] = 1.0
    for slot in act.slots:
        vec[offset + len(_ACT_TYPES) + ONTOLOGY.index(slot)] = 1.0


def featurize(ctx: DialogueContext) -> np.ndarray:
    """Deterministic fixed-dimension state vector, entries in [0, 1]."""
    vec = np.zeros(STATE_DIM)
    block = len(_ACT_TYPES) + N_SLOTS
    _act_block(vec, 0, ctx.last_user_act)
    _act_block(vec, block, ctx.last_system_act)
    base = 2 * block
    for i, slot in enumerate(ONTOLOGY):
        if slot in ctx.known_constraints:
            vec[base + i] = 1.0
        if slot in ctx.open_requests:
            vec[base + N_SLOTS + i] = 1.0
        if slot in ctx.answered_requests:
            vec[base + 2 * N_SLOTS + i] = 1.0
    base += 3 * N_SLOTS
    vec[base] = 1.0 if ctx.open_requests else 0.0
    vec[base + 1] = 1.0 if not ctx.open_requests and ctx.answered_requests else 0.0
    vec[base + 2] = len(ctx.open_requests) / N_SLOTS
    base += 3
    turn = min(ctx.turn, MAX_TURNS)
    vec[base] = turn / MAX_TURNS
    vec[base + 1 + (turn - 1)] = 1.0
    count, _ = ctx.kb_state()
    vec[base + 1 + MAX_TURNS] = min(count / len(ctx.kb), 1.0)
    return vec


def materialize(action_index: int, ctx: DialogueContext) -> DialogueAct:
    """Turn an action index into a concrete system act.

    inform(slot) draws its value from the first KB row matching the known
    constraints; with no matching row it degrades to not_sure.
    """
    kind, slot = SYSTEM_ACTIONS[action_index]
    if kind == "request":
        return request_act("system", slot)
    if kind == "inform":
        _, row = ctx.kb_state()
        if row is None:
            return DialogueAct("system", ActType.NOT_SURE)
        return inform_act("system", **{slot: row[slot]})
    return DialogueAct("system", ActType(kind))


def action_index_of(act: DialogueAct) -> int:
    """Map a system act back to its index (rule-agent transitions)."""
    if act.act_type is ActType.REQUEST:
        return SYSTEM_ACTIONS.index(("request", act.slots[0]))
    if act.act_type is ActType.INFORM:
        return SYSTEM_ACTIONS.index(("inform", act.slots[0]))
    if act.act_type is ActType.NOT_SURE:
        # the degraded inform; attribute it to the inform of the first slot
        return SYSTEM_ACTIONS.index(("inform", ONTOLOGY[0]))
    return SYSTEM_ACTIONS.index((act.act_type.value, None))


def student_act(q: QFunction, state: np.ndarray, epsilon: float,
                rng: np.random.Generator) -> int:
    """Epsilon-greedy over the action set; argmax ties go to lowest index."""
    if not 0.0 <= epsilon <= 1.0:
        raise ValueError("epsilon must lie in [0, 1]")
    if epsilon > 0.0 and rng.random() < epsilon:
        return int(rng.integers(N_ACTIONS))
    return int(np.argmax(q.forward(state)))


def step_reward(status: str) -> float:
    """-1 per turn, plus the terminal bonus/penalty on the final turn."""
    r = TURN_PENALTY
    if status == SUCCESS:
        r += SUCCESS_BONUS
    elif status != ONGOING:
        r += FAILURE_PENALTY
    return r


def epsilon_at(epoch: int, start: float = 0.3, end: float = 0.01,
               decay_epochs: int = 200) -> float:
    """Linear decay over the first decay_epochs epochs, then constant."""
    if epoch >= decay_epochs:
        return end
    frac = epoch / decay_epochs
    return start + (end - start) * frac


@dataclass
class EpisodeResult:
    success: bool
    turns: int
    total_reward: float
    transitions: list[Transition]


Policy = Callable[[np.ndarray, DialogueContext], int]


def run_episode(goal: UserGoal, kb: KnowledgeBase, policy: Policy,
                rng: np.random.Generator,
                on_transition: Callable[[Transition], None] | None = None) -> EpisodeResult:
    """Play one dialogue under the given policy, collecting transitions."""
    session, user_act = session_reset(goal, kb, rng)
    ctx = DialogueContext(kb=kb)
    ctx.observe_user(user_act)
    ctx.turn = session.turn
    transitions: list[Transition] = []
    total = 0.0
    while True:
        state = featurize(ctx)
        action = policy(state, ctx)
        system_act = materialize(action, ctx)
        ctx.observe_system(system_act)
        user_act, status = session_step(session, system_act)
        ctx.observe_user(user_act)
        ctx.turn = session.turn
        reward = step_reward(status)
        next_state = featurize(ctx)
        t = Transition(state, action, reward, next_state, status != ONGOING)
        transitions.append(t)
        total += reward
        if on_transition is not None:
            on_transition(t)
        if status != ONGOING:
            return EpisodeResult(status == SUCCESS, session.turn, total, transitions)


def greedy_policy(q: QFunction) -> Policy:
    return lambda state, ctx: student_act(q, state, 0.0, np.random.default_rng(0))


def epsilon_policy(q: QFunction, epsilon: float, rng: np.random.Generator) -> Policy:
    return lambda state, ctx: student_act(q, state, epsilon, rng)


def rule_policy() -> Policy:
    return lambda state, ctx: action_index_of(rule_agent_act(ctx))


def run_rule_episode(goal: UserGoal, kb: KnowledgeBase,
                     rng: np.random.Generator) -> EpisodeResult:
    return run_episode(goal, kb, rule_policy(), rng)


def student_train_step(q: QFunction, buffer, rng: np.random.Generator,
                       gamma: float = 0.9, batch_size: int = 16) -> float | None:
    """One minibatch TD update; None when the buffer is underfull."""
    batch = buffer.sample(batch_size, rng)
    if batch is None:
        return None
    return q.td_train_step(batch, gamma)
