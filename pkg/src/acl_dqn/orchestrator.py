"""Full training loop, evaluation, comparisons, and the alpha sweep."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field, replace

import numpy as np

from .curriculum import OverRepetitionCounter, PhaseMachine, PhaseTransition
from .domain import GoalCorpus, generate_corpus, generate_kb_rows
from .neural import QFunction
from .replay import ReplayBuffer, STUDENT_CAPACITY, TEACHER_CAPACITY, Transition, rbs_prefill
from .student import (
    N_ACTIONS,
    STATE_DIM,
    epsilon_at,
    epsilon_policy,
    greedy_policy,
    run_episode,
    student_train_step,
)
from .teacher import (
    GoalRewardTable,
    TeacherStateBuilder,
    make_teacher_q,
    teacher_act,
    teacher_reward,
    teacher_train_step,
)
from .user_sim import KnowledgeBase

log = logging.getLogger("acl_dqn")

AGENT_KINDS = ("dqn", "acl-a", "acl-b", "acl-c", "acl-a-noorp")

_SCHEDULE_OF = {
    "dqn": "A",
    "acl-a": "A",
    "acl-a-noorp": "A",
    "acl-b": "B",
    "acl-c": "C",
}


class ConfigError(Exception):
    pass


@dataclass(frozen=True)
class TrainConfig:
    agent_kind: str = "dqn"
    num_epochs: int = 500
    epoch_size: int | None = None  # schedule B/C budgets; defaults to num_epochs
    gamma: float = 0.9
    alpha: float = 0.5
    mastery_window: int = 5
    eval_every: int = 5
    eval_dialogues: int = 50
    hidden_dim: int = 80
    learning_rate: float = 0.001
    clip_norm: float = 1.0
    batch_size: int = 16
    rbs_dialogues: int = 100
    updates_per_turn: int = 1
    # When set, the student takes this many minibatch steps per epoch after
    # the episode instead of updates_per_turn steps per collected transition,
    # decoupling gradient work from episode length.
    updates_per_epoch: int | None = None
    epsilon_start: float = 0.3
    epsilon_end: float = 0.01
    epsilon_decay_epochs: int = 200

    def validate(self) -> None:
        if self.agent_kind not in AGENT_KINDS:
            raise ConfigError(
                f"unknown agent kind {self.agent_kind!r}; valid: {', '.join(AGENT_KINDS)}")
        if self.num_epochs < 1:
            raise ConfigError("num_epochs must be >= 1")
        if self.eval_every < 1 or self.eval_dialogues < 1:
            raise ConfigError("eval cadence and dialogue count must be >= 1")
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError("gamma must lie in [0, 1]")

    @property
    def schedule(self) -> str:
        return _SCHEDULE_OF[self.agent_kind]

    @property
    def uses_teacher(self) -> bool:
        return self.agent_kind != "dqn"

    @property
    def uses_orp(self) -> bool:
        return self.agent_kind not in ("dqn", "acl-a-noorp")


@dataclass
class TeacherLogRow:
    epoch: int
    goal_id: int
    og: int
    r_or: float
    x_now: float
    x_prev: float
    r: float


@dataclass
class MetricsSeries:
    eval_rows: list[tuple[int, float, float, float]] = field(default_factory=list)
    teacher_log: list[TeacherLogRow] = field(default_factory=list)
    phase_log: list[PhaseTransition] = field(default_factory=list)


@dataclass
class RunResult:
    config: TrainConfig
    seed: int
    metrics: MetricsSeries
    student_q: QFunction


def default_environment(seed: int) -> tuple[GoalCorpus, KnowledgeBase]:
    rows = generate_kb_rows(seed)
    return generate_corpus(seed, kb_rows=rows), KnowledgeBase(rows)


def evaluate_policy(q: QFunction, corpus: GoalCorpus, kb: KnowledgeBase,
                    n_dialogues: int, rng: np.random.Generator) -> tuple[float, float, float]:
    """Greedy rollouts on uniformly drawn goals; no learning, no buffers."""
    policy = greedy_policy(q)
    successes = 0
    rewards = 0.0
    turns = 0
    for _ in range(n_dialogues):
        goal = corpus.goals[int(rng.integers(len(corpus.goals)))]
        result = run_episode(goal, kb, policy, rng)
        successes += result.success
        rewards += result.total_reward
        turns += result.turns
    return successes / n_dialogues, rewards / n_dialogues, turns / n_dialogues


def run_training(config: TrainConfig, seed: int,
                 corpus: GoalCorpus | None = None,
                 kb: KnowledgeBase | None = None) -> RunResult:
    """One full training run, fully deterministic in (config, seed)."""
    config.validate()
    if corpus is None or kb is None:
        corpus, kb = default_environment(seed)
    if len(corpus) == 0:
        raise ConfigError("cannot train on an empty corpus")

    init_rng = np.random.default_rng([seed, 1])
    sim_rng = np.random.default_rng([seed, 2])
    student_rng = np.random.default_rng([seed, 3])
    teacher_rng = np.random.default_rng([seed, 4])
    prefill_rng = np.random.default_rng([seed, 5])

    student_q = QFunction(STATE_DIM, N_ACTIONS, config.hidden_dim,
                          config.learning_rate, config.clip_norm, init_rng)
    teacher_q = make_teacher_q(corpus, config.hidden_dim, config.learning_rate,
                               config.clip_norm, init_rng)
    d_student = ReplayBuffer(STUDENT_CAPACITY, STATE_DIM)
    d_teacher = ReplayBuffer(TEACHER_CAPACITY, teacher_q.input_dim)

    rbs_prefill(d_student, corpus, kb, prefill_rng, config.rbs_dialogues)
    log.info("warm start done: %d transitions in the student buffer", len(d_student))

    epoch_size = config.epoch_size or config.num_epochs
    machine = PhaseMachine(config.schedule, corpus, epoch_size,
                           alpha=config.alpha, window_size=config.mastery_window)
    counter = OverRepetitionCounter(machine.active_goal_ids())
    table = GoalRewardTable()
    state_builder = TeacherStateBuilder(n_goals=len(corpus))
    metrics = MetricsSeries()
    teacher_state = state_builder.build()

    for epoch in range(1, config.num_epochs + 1):
        student_q.sync_target()
        teacher_q.sync_target()
        eps = epsilon_at(epoch - 1, config.epsilon_start, config.epsilon_end,
                         config.epsilon_decay_epochs)

        active = machine.active_goal_ids()
        if config.uses_teacher:
            goal_id = teacher_act(teacher_q, teacher_state, active, eps, teacher_rng)
        else:
            goal_id = active[int(teacher_rng.integers(len(active)))]
        raw_r_or = counter.on_goal_sampled(goal_id)
        r_or = raw_r_or if config.uses_orp else 0.0

        def train_cb(transition):
            d_student.push(transition)
            if config.updates_per_epoch is None:
                for _ in range(config.updates_per_turn):
                    student_train_step(student_q, d_student, student_rng,
                                       config.gamma, config.batch_size)

        goal = corpus.goal(goal_id)
        result = run_episode(goal, kb, epsilon_policy(student_q, eps, student_rng),
                             sim_rng, on_transition=train_cb)
        if config.updates_per_epoch is not None:
            for _ in range(config.updates_per_epoch):
                student_train_step(student_q, d_student, student_rng,
                                   config.gamma, config.batch_size)

        x_now = result.total_reward
        r, x_prev = teacher_reward(r_or, x_now, table, goal_id)
        metrics.teacher_log.append(TeacherLogRow(
            epoch, goal_id, counter.count(goal_id), r_or, x_now, x_prev, r))

        state_builder.record_episode(goal_id, corpus.tier_of(goal_id),
                                     result.success, x_now, student_q.param_scalar())
        next_teacher_state = state_builder.build()
        if config.uses_teacher:
            d_teacher.push(Transition(teacher_state, goal_id, r,
                                      next_teacher_state, False))
            teacher_train_step(teacher_q, d_teacher, teacher_rng,
                               config.gamma, config.batch_size)
        teacher_state = next_teacher_state

        moved = machine.on_episode(epoch, result.success)
        if moved is not None:
            metrics.phase_log.append(moved)
            counter.reset(machine.active_goal_ids())
            log.info("phase %s -> %s at epoch %d (%s)",
                     moved.old_phase, moved.new_phase, epoch, moved.trigger)

        if epoch % config.eval_every == 0:
            eval_rng = np.random.default_rng([seed, 6, epoch])
            sr, rew, trn = evaluate_policy(student_q, corpus, kb,
                                           config.eval_dialogues, eval_rng)
            metrics.eval_rows.append((epoch, sr, rew, trn))

    return RunResult(config, seed, metrics, student_q)


def write_metrics_csv(metrics: MetricsSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "success", "reward", "turns"])
        for epoch, sr, rew, trn in metrics.eval_rows:
            writer.writerow([epoch, repr(sr), repr(rew), repr(trn)])


def write_teacher_log_csv(metrics: MetricsSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "goal_id", "og", "r_or", "x_now", "x_prev", "r"])
        for row in metrics.teacher_log:
            writer.writerow([row.epoch, row.goal_id, row.og, repr(row.r_or),
                             repr(row.x_now), repr(row.x_prev), repr(row.r)])


def write_phase_log_csv(metrics: MetricsSeries, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "from", "to", "trigger"])
        for t in metrics.phase_log:
            writer.writerow([t.epoch, t.old_phase, t.new_phase, t.trigger])


def selection_counts(metrics: MetricsSeries, n_goals: int) -> np.ndarray:
    counts = np.zeros(n_goals, dtype=int)
    for row in metrics.teacher_log:
        counts[row.goal_id] += 1
    return counts


@dataclass
class ComparisonReport:
    runs: list[RunResult]

    def by_agent(self) -> dict[str, list[RunResult]]:
        grouped: dict[str, list[RunResult]] = {}
        for run in self.runs:
            grouped.setdefault(run.config.agent_kind, []).append(run)
        return grouped

    def curve(self, agent_kind: str) -> list[tuple[int, float, float, float, float]]:
        """Per-epoch (epoch, mean success, var success, mean reward, mean turns)."""
        runs = self.by_agent()[agent_kind]
        epochs = [row[0] for row in runs[0].metrics.eval_rows]
        out = []
        for i, epoch in enumerate(epochs):
            sr = np.array([r.metrics.eval_rows[i][1] for r in runs])
            rew = np.array([r.metrics.eval_rows[i][2] for r in runs])
            trn = np.array([r.metrics.eval_rows[i][3] for r in runs])
            out.append((epoch, float(sr.mean()), float(sr.var()),
                        float(rew.mean()), float(trn.mean())))
        return out

    def final_success(self, agent_kind: str) -> np.ndarray:
        return np.array([r.metrics.eval_rows[-1][1] for r in self.by_agent()[agent_kind]])

    def success_at(self, agent_kind: str, epoch: int) -> np.ndarray:
        out = []
        for run in self.by_agent()[agent_kind]:
            row = next(r for r in run.metrics.eval_rows if r[0] == epoch)
            out.append(row[1])
        return np.array(out)


def run_comparison(configs, seeds,
                   corpus: GoalCorpus | None = None,
                   kb: KnowledgeBase | None = None) -> ComparisonReport:
    """Every (config, seed) pair; deterministic merge order."""
    runs = []
    for config in configs:
        for seed in seeds:
            log.info("run: agent=%s seed=%d", config.agent_kind, seed)
            runs.append(run_training(config, seed, corpus, kb))
    return ComparisonReport(runs)


def sweep_alpha(base_config: TrainConfig, alphas, seeds,
                corpus: GoalCorpus | None = None,
                kb: KnowledgeBase | None = None) -> dict[float, ComparisonReport]:
    if base_config.agent_kind != "acl-c":
        raise ConfigError("the mastery sweep only applies to acl-c")
    reports = {}
    for alpha in alphas:
        config = replace(base_config, alpha=alpha)
        reports[alpha] = run_comparison([config], seeds, corpus, kb)
    return reports


def write_curve_csv(report: ComparisonReport, agent_kind: str, path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["epoch", "mean_success", "var_success", "mean_reward", "mean_turns"])
        for row in report.curve(agent_kind):
            writer.writerow([row[0]] + [repr(v) for v in row[1:]])
