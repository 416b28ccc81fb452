"""Agenda-based user simulator for the movie-booking task.

The simulator plays one user goal against a system agent at dialogue-act
level.  It is fully deterministic given (goal, rng seed, system acts): the
user reveals a seeded subset of constraints up front, answers requests
about constrained slots, tracks which of its request slots the system has
answered, and accepts a booking only when every answer matches the KB row
consistent with the full goal constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .domain import (
    ONTOLOGY,
    ActType,
    DialogueAct,
    UserGoal,
    inform_act,
    request_act,
)

MAX_TURNS = 40

# Probability that each inform constraint is stated in the opening agenda.
# Users with small goals state their constraints up front; the more slots a
# goal spans, the more of its constraints stay hidden until asked for.
REVEAL_P_MAX = 0.8
REVEAL_P_MIN = 0.1
REVEAL_P_SLOPE = 0.15


def reveal_probability(goal: UserGoal) -> float:
    n = len(goal.inform_slots) + len(goal.request_slots)
    return max(REVEAL_P_MIN, REVEAL_P_MAX - REVEAL_P_SLOPE * (n - 2))

ONGOING = "ongoing"
SUCCESS = "success"
FAILURE = "failure"


class SessionError(Exception):
    """Stepping a terminated session, or other usage errors."""


@dataclass(frozen=True)
class KnowledgeBase:
    rows: tuple[dict[str, str], ...]

    def __len__(self) -> int:
        return len(self.rows)


def kb_query(kb: KnowledgeBase, constraints: Mapping[str, str]) -> tuple[int, dict[str, str] | None]:
    """Count rows matching all constraints; first match in stable order."""
    count = 0
    first = None
    for row in kb.rows:
        if all(row.get(s) == v for s, v in constraints.items()):
            if first is None:
                first = row
            count += 1
    return count, first


def designated_row(kb: KnowledgeBase, goal: UserGoal) -> dict[str, str] | None:
    """The KB row a successful booking must agree with."""
    _, row = kb_query(kb, goal.inform_dict)
    return row


@dataclass
class SimulatorSession:
    goal: UserGoal
    kb: KnowledgeBase
    agenda: list[DialogueAct] = field(default_factory=list)
    turn: int = 0
    filled_requests: dict[str, str] = field(default_factory=dict)
    revealed: set[str] = field(default_factory=set)
    status: str = ONGOING


def session_reset(goal: UserGoal, kb: KnowledgeBase,
                  rng: np.random.Generator) -> tuple[SimulatorSession, DialogueAct]:
    """Build the opening agenda and pop the first user act.

    The agenda is a stack: request acts at the bottom, a seeded subset of
    inform constraints on top, so the user states (some) constraints first
    and asks its questions afterwards.
    """
    session = SimulatorSession(goal=goal, kb=kb)
    for slot in reversed(goal.request_slots):
        session.agenda.append(request_act("user", slot))
    p_reveal = reveal_probability(goal)
    revealed = [s for s, _ in goal.inform_slots if rng.random() < p_reveal]
    informs = {s: goal.inform_dict[s] for s in revealed}
    session.revealed.update(revealed)
    if informs:
        session.agenda.append(inform_act("user", **informs))
    session.turn = 1
    first = session.agenda.pop()
    return session, first


def _pop_agenda(session: SimulatorSession) -> DialogueAct | None:
    while session.agenda:
        act = session.agenda.pop()
        if act.act_type is ActType.REQUEST and all(
                s in session.filled_requests for s in act.slots):
            continue  # already answered out of turn
        return act
    return None


def _booking_valid(session: SimulatorSession) -> bool:
    goal = session.goal
    if any(s not in session.filled_requests for s in goal.request_slots):
        return False
    row = designated_row(session.kb, goal)
    if row is None:
        return False
    return all(session.filled_requests[s] == row[s] for s in goal.request_slots)


def session_step(session: SimulatorSession,
                 system_act: DialogueAct) -> tuple[DialogueAct, str]:
    """Advance one exchange: system act in, user act and status out."""
    if session.status != ONGOING:
        raise SessionError("session_step after terminal status")

    goal = session.goal
    user_act: DialogueAct | None = None

    if system_act.act_type is ActType.REQUEST:
        known = {s: goal.inform_dict[s] for s in system_act.slots if s in goal.inform_dict}
        if known:
            session.revealed.update(known)
            user_act = inform_act("user", **known)
        else:
            # Can't answer; pursue own agenda instead of stalling.
            user_act = _pop_agenda(session) or DialogueAct("user", ActType.NOT_SURE)
    elif system_act.act_type is ActType.INFORM:
        for slot, value in system_act.payload:
            if slot in goal.request_slots:
                session.filled_requests[slot] = value
        user_act = _pop_agenda(session) or DialogueAct("user", ActType.CONFIRM_ANSWER)
    elif system_act.act_type is ActType.BOOK:
        if _booking_valid(session):
            session.status = SUCCESS
            user_act = DialogueAct("user", ActType.THANKS)
        else:
            # A booking that contradicts the goal or leaves questions
            # unanswered ends the dialogue: the user walks away.
            session.status = FAILURE
            user_act = DialogueAct("user", ActType.DENY)
    elif system_act.act_type is ActType.CLOSING:
        session.status = FAILURE
        user_act = DialogueAct("user", ActType.CLOSING)
    else:
        user_act = _pop_agenda(session) or DialogueAct("user", ActType.NOT_SURE)

    if session.status == ONGOING:
        if session.turn >= MAX_TURNS:
            session.status = FAILURE
        else:
            session.turn += 1
    return user_act, session.status


def validate_success(session: SimulatorSession) -> bool:
    """Independent post-episode check of the success contract."""
    if session.status != SUCCESS:
        return True
    return _booking_valid(session)


@dataclass
class DialogueContext:
    """The system side's running view of one dialogue.

    Tracks constraints the user has stated, the user's open and answered
    request slots, and the last act from each side.  Shared by the rule
    agent and the student featurizer.
    """

    kb: KnowledgeBase
    known_constraints: dict[str, str] = field(default_factory=dict)
    open_requests: list[str] = field(default_factory=list)
    answered_requests: dict[str, str] = field(default_factory=dict)
    requested_by_system: set[str] = field(default_factory=set)
    last_user_act: DialogueAct | None = None
    last_system_act: DialogueAct | None = None
    turn: int = 1

    def observe_user(self, act: DialogueAct) -> None:
        self.last_user_act = act
        if act.act_type is ActType.INFORM:
            for slot, value in act.payload:
                self.known_constraints[slot] = value
        elif act.act_type is ActType.REQUEST:
            for slot in act.slots:
                # a re-asked slot re-opens even if it was answered before
                self.answered_requests.pop(slot, None)
                if slot not in self.open_requests:
                    self.open_requests.append(slot)

    def observe_system(self, act: DialogueAct) -> None:
        self.last_system_act = act
        if act.act_type is ActType.REQUEST:
            self.requested_by_system.update(act.slots)
        elif act.act_type is ActType.INFORM:
            for slot, value in act.payload:
                if slot in self.open_requests:
                    self.open_requests.remove(slot)
                    self.answered_requests[slot] = value

    def kb_state(self) -> tuple[int, dict[str, str] | None]:
        return kb_query(self.kb, self.known_constraints)


# The hand-written warm-start policy only ever asks about this slot prefix;
# constraints on the remaining slots go unlearned, which is what keeps it
# "naive but occasionally successful".
RULE_AGENT_SLOTS: tuple[str, ...] = ONTOLOGY[:2]


def rule_agent_act(ctx: DialogueContext) -> DialogueAct:
    """Fixed warm-start policy: gather constraints, answer, book once."""
    count, row = ctx.kb_state()
    askable = [s for s in RULE_AGENT_SLOTS
               if s not in ctx.known_constraints
               and s not in ctx.requested_by_system
               and s not in ctx.open_requests
               and s not in ctx.answered_requests]
    if askable and count > 2:
        return request_act("system", askable[0])
    if ctx.open_requests:
        slot = ctx.open_requests[0]
        if row is not None:
            return inform_act("system", **{slot: row[slot]})
        return DialogueAct("system", ActType.NOT_SURE)
    return DialogueAct("system", ActType.BOOK)
