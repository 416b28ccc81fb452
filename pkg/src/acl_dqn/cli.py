"""Command-line front end: generation, training, experiments, and chat."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import domain, orchestrator
from .domain import ActType, DialogueAct, ONTOLOGY, UNK, inform_act, request_act
from .neural import QFunction
from .orchestrator import AGENT_KINDS, TrainConfig
from .user_sim import (
    FAILURE,
    KnowledgeBase,
    ONGOING,
    SUCCESS,
    session_reset,
    session_step,
)
from .student import greedy_policy, featurize, materialize
from .user_sim import DialogueContext


class CliError(Exception):
    """Bad flag values; exits with status 2."""


def _parse_sizes(text: str) -> tuple[int, int, int]:
    parts = text.split(",")
    if len(parts) != 3:
        raise CliError("--sizes expects three comma-separated integers")
    return tuple(int(p) for p in parts)  # type: ignore[return-value]


def _parse_seeds(text: str) -> list[int]:
    """Either a comma list ('1,2,3') or an inclusive range ('1..5')."""
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(p) for p in text.split(",")]


def _parse_floats(text: str) -> list[float]:
    return [float(p) for p in text.split(",")]


def _load_environment(args, seed: int):
    if args.kb:
        kb = KnowledgeBase(domain.load_kb_rows(args.kb))
    else:
        kb = KnowledgeBase(domain.generate_kb_rows(seed))
    if args.goals:
        corpus = domain.load_corpus(args.goals)
    else:
        corpus = domain.generate_corpus(seed, kb_rows=kb.rows)
    return corpus, kb


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_from_args(args) -> TrainConfig:
    config = TrainConfig(agent_kind=args.agent, num_epochs=args.epochs,
                         eval_every=args.eval_every,
                         eval_dialogues=args.eval_dialogues)
    if getattr(args, "alpha", None) is not None:
        config = replace(config, alpha=args.alpha)
    config.validate()
    return config


def cmd_gen_goals(args) -> int:
    out = _out_dir(args)
    rows = domain.generate_kb_rows(args.seed)
    corpus = domain.generate_corpus(args.seed, sizes=_parse_sizes(args.sizes),
                                    kb_rows=rows)
    path = out / "goals.jsonl"
    domain.save_corpus(corpus, path)
    print(f"wrote {len(corpus)} goals to {path}")
    return 0


def cmd_gen_kb(args) -> int:
    out = _out_dir(args)
    rows = domain.generate_kb_rows(args.seed, n_rows=args.rows)
    path = out / "kb.jsonl"
    domain.save_kb_rows(rows, path)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_train(args) -> int:
    config = _config_from_args(args)
    corpus, kb = _load_environment(args, args.seed)
    out = _out_dir(args)
    result = orchestrator.run_training(config, args.seed, corpus, kb)
    orchestrator.write_metrics_csv(result.metrics, out / "metrics.csv")
    orchestrator.write_teacher_log_csv(result.metrics, out / "teacher_log.csv")
    orchestrator.write_phase_log_csv(result.metrics, out / "phase_log.csv")
    result.student_q.save(out / "student.qfn")
    final = result.metrics.eval_rows[-1] if result.metrics.eval_rows else None
    if final:
        print(f"final success rate: {final[1]:.4f} (epoch {final[0]})")
    return 0


def cmd_eval(args) -> int:
    corpus, kb = _load_environment(args, args.seed)
    q = QFunction.load(args.checkpoint)
    rng = np.random.default_rng([args.seed, 6])
    sr, rew, trn = orchestrator.evaluate_policy(q, corpus, kb,
                                                args.eval_dialogues, rng)
    print(f"success={sr:.4f} reward={rew:.2f} turns={trn:.2f}")
    return 0


def cmd_compare(args) -> int:
    agents = args.agents.split(",")
    for agent in agents:
        if agent not in AGENT_KINDS:
            raise CliError(f"unknown agent {agent!r}; valid: {', '.join(AGENT_KINDS)}")
    seeds = _parse_seeds(args.seeds)
    configs = [TrainConfig(agent_kind=a, num_epochs=args.epochs,
                           eval_every=args.eval_every,
                           eval_dialogues=args.eval_dialogues) for a in agents]
    corpus, kb = _load_environment(args, seeds[0])
    out = _out_dir(args)
    report = orchestrator.run_comparison(configs, seeds, corpus, kb)
    for agent in agents:
        orchestrator.write_curve_csv(report, agent, out / f"curve_{agent}.csv")
    with open(out / "stability.csv", "w", encoding="utf-8") as fh:
        fh.write("agent,final_mean_success,final_var_success\n")
        for agent in agents:
            final = report.final_success(agent)
            fh.write(f"{agent},{final.mean()!r},{final.var()!r}\n")
    with open(out / "selection_counts.csv", "w", encoding="utf-8") as fh:
        fh.write("agent,seed," + ",".join(f"g{g}" for g in corpus.all_ids()) + "\n")
        for run in report.runs:
            counts = orchestrator.selection_counts(run.metrics, len(corpus))
            fh.write(f"{run.config.agent_kind},{run.seed},"
                     + ",".join(str(c) for c in counts) + "\n")
    print(f"wrote {len(agents)} curves to {out}")
    return 0


def cmd_sweep_alpha(args) -> int:
    alphas = _parse_floats(args.alphas)
    seeds = _parse_seeds(args.seeds)
    base = TrainConfig(agent_kind="acl-c", num_epochs=args.epochs,
                       eval_every=args.eval_every,
                       eval_dialogues=args.eval_dialogues)
    corpus, kb = _load_environment(args, seeds[0])
    out = _out_dir(args)
    reports = orchestrator.sweep_alpha(base, alphas, seeds, corpus, kb)
    for alpha, report in reports.items():
        orchestrator.write_curve_csv(report, "acl-c", out / f"curve_alpha_{alpha}.csv")
    print(f"wrote {len(alphas)} curves to {out}")
    return 0


# --- interactive chat ------------------------------------------------------

_TEMPLATES = {
    ActType.REQUEST: "May I ask: what {slots}?",
    ActType.INFORM: "Here is what I found: {values}.",
    ActType.CONFIRM_QUESTION: "Could you confirm that?",
    ActType.CONFIRM_ANSWER: "Understood.",
    ActType.DENY: "I'm afraid that's not right.",
    ActType.THANKS: "Thank you!",
    ActType.CLOSING: "Goodbye.",
    ActType.GREETING: "Hello! How can I help you book a movie?",
    ActType.NOT_SURE: "I'm not sure about that.",
    ActType.MULTIPLE_CHOICE: "There are several options.",
    ActType.BOOK: "I'd like to book those tickets for you now.",
}


def render_act(act: DialogueAct) -> str:
    """Readable template text for a dialogue act."""
    template = _TEMPLATES[act.act_type]
    slots = " and ".join(act.slots)
    values = ", ".join(f"{s}={v}" for s, v in act.payload if v != UNK)
    return template.format(slots=slots or "that", values=values or "nothing")


def _menu_user_act(stdin, stdout) -> DialogueAct | None:
    """Guided act entry; None means the human ends the dialogue."""
    stdout.write("your act [request/inform/confirm_answer/deny/thanks/quit]: ")
    stdout.flush()
    line = stdin.readline()
    if not line:
        return None
    choice = line.strip().lower()
    if choice in ("quit", "q", ""):
        return None
    if choice == "request":
        stdout.write(f"slot ({', '.join(ONTOLOGY)}): ")
        stdout.flush()
        slot = stdin.readline().strip()
        return request_act("user", slot)
    if choice == "inform":
        stdout.write("slot=value: ")
        stdout.flush()
        slot, _, value = stdin.readline().strip().partition("=")
        return inform_act("user", **{slot: value})
    return DialogueAct("user", ActType(choice))


def run_chat_session(q: QFunction, goal, kb: KnowledgeBase, rng,
                     stdin=sys.stdin, stdout=sys.stdout) -> dict:
    """One human-driven dialogue; returns the transcript record."""
    session, first_act = session_reset(goal, kb, rng)
    ctx = DialogueContext(kb=kb)
    stdout.write("Your goal:\n")
    stdout.write(f"  constraints: {goal.inform_dict}\n")
    stdout.write(f"  find out:    {', '.join(goal.request_slots)}\n")
    stdout.write(f"you: {render_act(first_act)}\n")
    ctx.observe_user(first_act)
    transcript = [("user", first_act.act_type.value, dict(first_act.payload))]
    policy = greedy_policy(q)
    while session.status == ONGOING:
        ctx.turn = session.turn
        action = policy(featurize(ctx), ctx)
        system_act = materialize(action, ctx)
        ctx.observe_system(system_act)
        stdout.write(f"system: {render_act(system_act)}\n")
        transcript.append(("system", system_act.act_type.value, dict(system_act.payload)))
        # the human's reply replaces the simulator's scripted user side
        user_act = _menu_user_act(stdin, stdout)
        if user_act is None:
            session.status = FAILURE
            break
        session_step(session, system_act)  # bookkeeping for turn cap / booking
        ctx.observe_user(user_act)
        transcript.append(("user", user_act.act_type.value, dict(user_act.payload)))
    success = session.status == SUCCESS
    score = None
    if success:
        stdout.write("score this dialogue 1-10: ")
        stdout.flush()
        line = stdin.readline().strip()
        score = int(line) if line.isdigit() else None
    stdout.write(f"dialogue {'succeeded' if success else 'failed'}\n")
    return {"goal_id": goal.id, "success": success, "score": score,
            "transcript": transcript}


def cmd_chat(args) -> int:
    corpus, kb = _load_environment(args, args.seed)
    q = QFunction.load(args.checkpoint)
    rng = np.random.default_rng([args.seed, 7])
    goal = corpus.goals[int(rng.integers(len(corpus.goals)))]
    record = run_chat_session(q, goal, kb, rng)
    out = _out_dir(args)
    with open(out / "chat_log.jsonl", "a", encoding="utf-8") as fh:
        fh.write(json.dumps(record) + "\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acl-dqn",
        description="Curriculum-taught DQN dialogue policy training")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_env_flags(p):
        p.add_argument("--goals", default=None, help="goal corpus file")
        p.add_argument("--kb", default=None, help="knowledge base file")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--seed", type=int, default=1)
        p.add_argument("--eval-every", type=int, default=5)
        p.add_argument("--eval-dialogues", type=int, default=50)

    p = sub.add_parser("gen-goals", help="generate a synthetic goal corpus")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--sizes", default="30,72,26")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_goals)

    p = sub.add_parser("gen-kb", help="generate the synthetic knowledge base")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--rows", type=int, default=200)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_gen_kb)

    p = sub.add_parser("train", help="train one agent")
    p.add_argument("--agent", default="dqn")
    p.add_argument("--epochs", type=int, default=500)
    p.add_argument("--alpha", type=float, default=None)
    add_env_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--checkpoint", required=True)
    add_env_flags(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="run the multi-agent comparison")
    p.add_argument("--agents", default="dqn,acl-a,acl-b,acl-c")
    p.add_argument("--seeds", default="1..5")
    p.add_argument("--epochs", type=int, default=500)
    add_env_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-alpha", help="mastery threshold sweep (acl-c)")
    p.add_argument("--alphas", default="0.3,0.4,0.5,0.6,0.7,0.8")
    p.add_argument("--seeds", default="1..3")
    p.add_argument("--epochs", type=int, default=500)
    add_env_flags(p)
    p.set_defaults(func=cmd_sweep_alpha)

    p = sub.add_parser("chat", help="talk to a trained agent at act level")
    p.add_argument("--checkpoint", required=True)
    add_env_flags(p)
    p.set_defaults(func=cmd_chat)

    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=os.environ.get("ACLDQN_LOG", "WARNING").upper())
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (CliError, orchestrator.ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (domain.DomainError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
