import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from acl_dqn.domain import (
    ONTOLOGY,
    TIER_BANDS,
    ActType,
    CorpusFormatError,
    DialogueAct,
    DomainError,
    GoalCorpus,
    UserGoal,
    difficulty_of,
    generate_corpus,
    generate_kb_rows,
    inform_act,
    load_corpus,
    load_kb_rows,
    make_goal,
    partition_corpus,
    request_act,
    save_corpus,
    save_kb_rows,
)


def _goal(goal_id, n_informs, n_requests):
    informs = {ONTOLOGY[i]: "x" for i in range(n_informs)}
    requests = [ONTOLOGY[n_informs + i] for i in range(n_requests)]
    return make_goal(goal_id, informs, requests)


class TestDialogueAct:
    def test_eleven_act_types(self):
        assert len(ActType) == 11

    def test_request_acts_carry_only_unk(self):
        act = request_act("user", "city")
        assert act.payload == (("city", "UNK"),)
        with pytest.raises(DomainError):
            DialogueAct("user", ActType.REQUEST, (("city", "boston"),))

    def test_inform_acts_carry_only_concrete_values(self):
        act = inform_act("system", city="boston")
        assert act.payload == (("city", "boston"),)
        with pytest.raises(DomainError):
            DialogueAct("system", ActType.INFORM, (("city", "UNK"),))

    def test_unknown_actor_rejected(self):
        with pytest.raises(DomainError):
            DialogueAct("observer", ActType.GREETING)

    def test_slot_must_be_in_ontology(self):
        with pytest.raises(DomainError):
            inform_act("user", color="red")


class TestUserGoal:
    def test_difficulty_is_component_sum(self):
        assert difficulty_of(_goal(0, 3, 2)) == 5
        assert difficulty_of(_goal(0, 0, 1)) == 1
        assert difficulty_of(_goal(0, 6, 3)) == 9

    def test_overlapping_slots_rejected(self):
        with pytest.raises(DomainError):
            make_goal(0, {"city": "boston"}, ["city"])

    def test_empty_requests_rejected(self):
        with pytest.raises(DomainError):
            make_goal(0, {"city": "boston"}, [])

    def test_negative_id_rejected(self):
        with pytest.raises(DomainError):
            make_goal(-1, {}, ["city"])


class TestPartition:
    def test_default_sizes(self, corpus):
        assert len(corpus.simple) == 30
        assert len(corpus.medium) == 72
        assert len(corpus.difficult) == 26
        assert len(corpus) == 128

    def test_one_goal_per_tier(self):
        goals = [_goal(0, 0, 1), _goal(1, 3, 2), _goal(2, 6, 3)]
        c = partition_corpus(goals, (1, 1, 1))
        assert c.simple == (0,)
        assert c.medium == (1,)
        assert c.difficult == (2,)

    def test_ties_broken_by_ascending_id(self):
        goals = [_goal(i, 2, 1) for i in (3, 1, 0, 2)]
        c = partition_corpus(goals, (2, 1, 1))
        assert c.simple == (0, 1)
        assert c.medium == (2,)
        assert c.difficult == (3,)

    def test_size_mismatch_rejected(self):
        with pytest.raises(DomainError):
            partition_corpus([_goal(0, 1, 1)], (1, 1, 1))

    @given(st.lists(st.tuples(st.integers(0, 8), st.integers(1, 4)),
                    min_size=3, max_size=40))
    @settings(max_examples=50, deadline=None)
    def test_partition_matches_stable_sort_oracle(self, shapes):
        goals = []
        for i, (n_i, n_r) in enumerate(shapes):
            n_i = min(n_i, len(ONTOLOGY) - n_r)
            goals.append(_goal(i, n_i, n_r))
        third = len(goals) // 3
        sizes = (third, third, len(goals) - 2 * third)
        if 0 in sizes:
            return
        c = partition_corpus(goals, sizes)
        oracle = sorted(goals, key=lambda g: (difficulty_of(g), g.id))
        assert list(c.simple) + list(c.medium) + list(c.difficult) == [
            g.id for g in oracle]

    def test_partition_respects_difficulty_order(self, corpus):
        by_id = {g.id: g for g in corpus.goals}
        simple_max = max(difficulty_of(by_id[i]) for i in corpus.simple)
        medium_min = min(difficulty_of(by_id[i]) for i in corpus.medium)
        medium_max = max(difficulty_of(by_id[i]) for i in corpus.medium)
        difficult_min = min(difficulty_of(by_id[i]) for i in corpus.difficult)
        assert simple_max <= medium_min
        assert medium_max <= difficult_min

    def test_partition_must_cover_all_goals(self):
        goals = (_goal(0, 1, 1), _goal(1, 2, 1))
        with pytest.raises(DomainError):
            GoalCorpus(goals, simple=(0,), medium=(), difficult=())


class TestGeneration:
    def test_deterministic_in_seed(self):
        assert generate_corpus(7) == generate_corpus(7)
        assert generate_corpus(7) != generate_corpus(8)

    def test_difficulties_within_tier_bands(self, corpus):
        by_id = {g.id: g for g in corpus.goals}
        for tier, ids in (("simple", corpus.simple), ("medium", corpus.medium),
                          ("difficult", corpus.difficult)):
            lo, hi = TIER_BANDS[tier]
            for i in ids:
                assert lo <= difficulty_of(by_id[i]) <= hi

    def test_goals_satisfiable_against_kb(self, corpus, kb_rows):
        for g in corpus.goals:
            informs = g.inform_dict
            assert any(all(row[s] == v for s, v in informs.items())
                       for row in kb_rows)

    def test_kb_rows_deterministic_and_complete(self):
        rows = generate_kb_rows(1)
        assert rows == generate_kb_rows(1)
        assert len(rows) == 200
        for row in rows:
            assert set(row) == set(ONTOLOGY)

    def test_sorted_output_has_nondecreasing_difficulty(self):
        c = generate_corpus(7, sizes=(30, 72, 26))
        by_id = {g.id: g for g in c.goals}
        diffs = [difficulty_of(by_id[i])
                 for i in list(c.simple) + list(c.medium) + list(c.difficult)]
        assert diffs == sorted(diffs)


class TestCorpusIO:
    def test_round_trip(self, corpus, tmp_path):
        path = tmp_path / "goals.jsonl"
        save_corpus(corpus, path)
        assert load_corpus(path, sizes=(30, 72, 26)) == corpus

    def test_round_trip_with_inferred_sizes(self, corpus, tmp_path):
        path = tmp_path / "goals.jsonl"
        save_corpus(corpus, path)
        loaded = load_corpus(path)
        assert loaded.goals == corpus.goals

    def test_file_has_expected_fields(self, corpus, tmp_path):
        path = tmp_path / "goals.jsonl"
        save_corpus(corpus, path)
        lines = path.read_text().splitlines()
        assert len(lines) == 128
        record = json.loads(lines[0])
        assert set(record) == {"id", "inform_slots", "request_slots"}

    def test_duplicate_id_rejected_with_line_number(self, tmp_path):
        path = tmp_path / "goals.jsonl"
        record = json.dumps({"id": 0, "inform_slots": {}, "request_slots": ["city"]})
        path.write_text(record + "\n" + record + "\n")
        with pytest.raises(CorpusFormatError, match="line 2.*duplicate goal id"):
            load_corpus(path)

    def test_malformed_json_names_line(self, tmp_path):
        path = tmp_path / "goals.jsonl"
        path.write_text("not json\n")
        with pytest.raises(CorpusFormatError, match="line 1"):
            load_corpus(path)

    def test_empty_file_gives_empty_corpus(self, tmp_path):
        path = tmp_path / "goals.jsonl"
        path.write_text("")
        assert len(load_corpus(path)) == 0

    def test_kb_round_trip(self, kb_rows, tmp_path):
        path = tmp_path / "kb.jsonl"
        save_kb_rows(kb_rows, path)
        assert load_kb_rows(path) == kb_rows

    def test_kb_unknown_slot_rejected(self, tmp_path):
        path = tmp_path / "kb.jsonl"
        path.write_text(json.dumps({"color": "red"}) + "\n")
        with pytest.raises(CorpusFormatError, match="line 1"):
            load_kb_rows(path)
