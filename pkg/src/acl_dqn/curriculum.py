"""Curriculum schedules A/B/C, the over-repetition penalty, and mastery.

Schedule A leaves the full goal set open forever.  Schedule B walks the
difficulty tiers on a proportional episode budget.  Schedule C advances
early once the in-phase success rate clears the mastery threshold for T
consecutive snapshots, with B's budget kept as a force-advance ceiling so
an unmasterable tier cannot stall the run.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .domain import GoalCorpus, TIERS

L_MAX = 40.0
ORP_K = 10.0

SCHEDULES = ("A", "B", "C")
PHASE_ALL = "all"


class CurriculumError(Exception):
    pass


def orp_penalty(og: int, l_max: float = L_MAX, k: float = ORP_K) -> float:
    """Saturating penalty -L * og / (og + K); 0 at og=0, asymptote -L."""
    if og < 0:
        raise CurriculumError("sample count must be non-negative")
    return -l_max * og / (og + k)


class OverRepetitionCounter:
    """Per-goal sample counts within the current active goal set."""

    def __init__(self, goal_ids):
        self.og: dict[int, int] = {g: 0 for g in goal_ids}

    def reset(self, goal_ids) -> None:
        self.og = {g: 0 for g in goal_ids}

    def count(self, goal_id: int) -> int:
        return self.og[goal_id]

    def on_goal_sampled(self, goal_id: int) -> float:
        """Penalty on the pre-increment count: a first sample is free."""
        if goal_id not in self.og:
            raise CurriculumError(f"goal {goal_id} outside active set")
        r_or = orp_penalty(self.og[goal_id])
        self.og[goal_id] += 1
        return r_or


@dataclass
class MasteryTracker:
    """Window of in-phase success-rate snapshots gating schedule C."""

    alpha: float = 0.5
    window_size: int = 5  # number of consecutive qualifying snapshots, T
    n_success: int = 0
    n_sampled: int = 0
    window: list[float] = field(default_factory=list)

    def observe(self, success: bool) -> None:
        self.n_sampled += 1
        if success:
            self.n_success += 1
        self.window.append(self.n_success / self.n_sampled)
        if len(self.window) > self.window_size:
            self.window.pop(0)

    def mastered(self) -> bool:
        return (len(self.window) == self.window_size
                and all(p >= self.alpha for p in self.window))

    def reset(self) -> None:
        self.n_success = 0
        self.n_sampled = 0
        self.window.clear()


def schedule_b_budgets(tier_sizes: tuple[int, int, int], epoch_size: int) -> tuple[int, int]:
    """Episode budgets of the simple and medium phases; difficult absorbs the rest."""
    total = sum(tier_sizes)
    return (tier_sizes[0] * epoch_size // total,
            tier_sizes[1] * epoch_size // total)


@dataclass
class PhaseTransition:
    epoch: int
    old_phase: str
    new_phase: str
    trigger: str  # "budget" or "mastery"


class PhaseMachine:
    """Monotone phase state machine shared by the three schedules."""

    def __init__(self, schedule: str, corpus: GoalCorpus, epoch_size: int,
                 alpha: float = 0.5, window_size: int = 5):
        if schedule not in SCHEDULES:
            raise CurriculumError(f"unknown schedule {schedule!r}")
        self.schedule = schedule
        self.corpus = corpus
        self.phase = PHASE_ALL if schedule == "A" else TIERS[0]
        self.episodes_in_phase = 0
        sizes = tuple(len(corpus.tier_ids(t)) for t in TIERS)
        self.budgets = dict(zip(TIERS[:2], schedule_b_budgets(sizes, epoch_size)))
        self.mastery = MasteryTracker(alpha=alpha, window_size=window_size)
        self.transitions: list[PhaseTransition] = []

    def active_goal_ids(self) -> tuple[int, ...]:
        if self.phase == PHASE_ALL:
            return self.corpus.all_ids()
        return self.corpus.tier_ids(self.phase)

    def _advance(self, epoch: int, trigger: str) -> None:
        old = self.phase
        self.phase = TIERS[TIERS.index(self.phase) + 1]
        self.episodes_in_phase = 0
        self.mastery.reset()
        self.transitions.append(PhaseTransition(epoch, old, self.phase, trigger))

    def on_episode(self, epoch: int, success: bool) -> PhaseTransition | None:
        """Advance decision after one completed episode; None if staying."""
        if self.schedule == "A":
            return None
        self.episodes_in_phase += 1
        if self.schedule == "C":
            self.mastery.observe(success)
        if self.phase == TIERS[-1]:
            return None
        if self.schedule == "C" and self.mastery.mastered():
            self._advance(epoch, "mastery")
            return self.transitions[-1]
        if self.episodes_in_phase >= self.budgets[self.phase]:
            self._advance(epoch, "budget")
            return self.transitions[-1]
        return None
