from __future__ import annotations

import math

import pytest

from e2tp.core import Element, ElementKind, SentimentTuple, Task
from e2tp.errors import EmptyTargetSet, TaskMismatch, TemplateMismatch
from e2tp.step2 import (
    Paradigm,
    TaskPrompt,
    Template,
    build_step2,
    diet_order_index,
    enumerate_prompts,
    render_input,
    render_target,
    write_step2,
)
from corpus import make_corpus

A, C, O, S = ElementKind.ASPECT, ElementKind.CATEGORY, ElementKind.OPINION, ElementKind.SENTIMENT


class TestEnumeratePrompts:
    def test_aste_aspect_anchor(self):
        assert enumerate_prompts(Task.ASTE, A) == [(A, O, S), (A, S, O)]

    def test_asqp_category_anchor(self):
        orders = enumerate_prompts(Task.ASQP, C)
        assert len(orders) == 6
        assert all(order[0] is C for order in orders)
        assert len(set(orders)) == 6

    def test_tasd_sentiment_anchor(self):
        assert len(enumerate_prompts(Task.TASD, S)) == 2

    def test_anchor_outside_role_set(self):
        with pytest.raises(TaskMismatch):
            enumerate_prompts(Task.ASTE, C)

    @pytest.mark.parametrize("task", list(Task))
    def test_count_is_arity_minus_one_factorial(self, task):
        for kind in task.roles:
            assert len(enumerate_prompts(task, kind)) == math.factorial(task.arity - 1)

    def test_deterministic_order(self):
        assert enumerate_prompts(Task.ASQP, A) == enumerate_prompts(Task.ASQP, A)


class TestRenderInput:
    def test_plain_single_anchor_uses_thin_arrow(self):
        prompt = TaskPrompt((A, C, O, S), Template.T1)
        got = render_input("the sushi rocks", Element("sushi", A, 1), prompt, Paradigm.F1)
        assert got == "the sushi rocks → sushi: aspect, category, opinion, sentiment"

    def test_plain_repeated_anchor_uses_double_arrow(self):
        prompt = TaskPrompt((O, A, C, S), Template.T1)
        got = render_input("text here", Element("perfect", O, 2), prompt, Paradigm.F1)
        assert got == "text here ⇒ perfect: opinion, aspect, category, sentiment"

    def test_diet_always_double_arrow(self):
        prompt = TaskPrompt((A, O, S), Template.T1)
        got = render_input("t", Element("sushi", A, 1), prompt, Paradigm.DIET)
        assert got.startswith("t ⇒ sushi: ")

    def test_marker_template(self):
        prompt = TaskPrompt((A, S, O), Template.T2)
        got = render_input("the sushi rocks", Element("sushi", A, 1), prompt, Paradigm.F2)
        assert got == "the sushi rocks ⇒ sushi: [A] [S] [O]"

    def test_template_paradigm_pairing_enforced(self):
        with pytest.raises(TemplateMismatch):
            render_input("t", Element("x", A, 1), TaskPrompt((A, O, S), Template.T2), Paradigm.F1)
        with pytest.raises(TemplateMismatch):
            render_input("t", Element("x", A, 1), TaskPrompt((A, O, S), Template.T1), Paradigm.F2)

    def test_anchor_must_lead_order(self):
        with pytest.raises(ValueError):
            render_input("t", Element("x", O, 1), TaskPrompt((A, O, S), Template.T1), Paradigm.F1)


class TestRenderTarget:
    def test_marker_tuple(self):
        t = SentimentTuple("sushi", "positive", category="food quality", opinion="tasty")
        got = render_target([t], TaskPrompt((A, C, O, S), Template.T2))
        assert got == "[A] sushi [C] food quality [O] tasty [S] positive"

    def test_plain_multi_tuple(self, quad_example):
        prompt = TaskPrompt((O, A, C, S), Template.T1)
        got = render_target(list(quad_example.tuples), prompt)
        assert got == "perfect, sushi, food, positive | perfect, view, location, positive"

    def test_single_tuple_has_no_separator(self):
        t = SentimentTuple("sushi", "positive", opinion="tasty")
        got = render_target([t], TaskPrompt((A, O, S), Template.T2))
        assert "[SSEP]" not in got

    def test_empty_target_set(self):
        with pytest.raises(EmptyTargetSet):
            render_target([], TaskPrompt((A, O, S), Template.T1))


class TestBuildStep2:
    def test_six_anchor_quad_counts(self, quad_dataset):
        assert len(build_step2(quad_dataset, Paradigm.DIET, seed=7)) == 6
        assert len(build_step2(quad_dataset, Paradigm.F1)) == 36
        assert len(build_step2(quad_dataset, Paradigm.F2)) == 36

    @pytest.mark.parametrize("task,ratio", [(Task.ASTE, 2), (Task.TASD, 2), (Task.ASQP, 6), (Task.ACOS, 6)])
    def test_full_to_diet_ratio(self, task, ratio):
        dataset = make_corpus(task, n_sentences=20, seed=9)
        diet = len(build_step2(dataset, Paradigm.DIET, seed=1))
        assert len(build_step2(dataset, Paradigm.F1)) == ratio * diet
        assert len(build_step2(dataset, Paradigm.F2)) == ratio * diet

    def test_diet_requires_seed(self, quad_dataset):
        with pytest.raises(ValueError):
            build_step2(quad_dataset, Paradigm.DIET)

    def test_diet_deterministic(self, quad_dataset):
        one = build_step2(quad_dataset, Paradigm.DIET, seed=13)
        two = build_step2(quad_dataset, Paradigm.DIET, seed=13)
        assert one == two

    def test_diet_group_consistency(self):
        dataset = make_corpus(Task.ASQP, n_sentences=30, seed=11)
        records = build_step2(dataset, Paradigm.DIET, seed=4)
        orders_by_kind: dict[ElementKind, set] = {}
        for record in records:
            orders_by_kind.setdefault(record.anchor.kind, set()).add(record.prompt.order)
        assert all(len(orders) == 1 for orders in orders_by_kind.values())

    def test_diet_seeds_can_differ(self):
        # over all kinds and a few seeds, at least one drawn order must change
        draws = {
            seed: tuple(diet_order_index(seed, kind, 6) for kind in ElementKind)
            for seed in range(8)
        }
        assert len(set(draws.values())) > 1

    def test_arrow_matches_multiplicity_under_f1(self):
        dataset = make_corpus(Task.ASQP, n_sentences=25, seed=12)
        for record in build_step2(dataset, Paradigm.F1):
            expected = "→" if record.anchor.multiplicity == 1 else "⇒"
            assert record.arrow == expected
            assert f" {expected} " in record.input_text

    def test_anchor_first_in_every_target_tuple(self):
        dataset = make_corpus(Task.ASQP, n_sentences=15, seed=13)
        for record in build_step2(dataset, Paradigm.F2):
            for fragment in record.target_text.split(" [SSEP] "):
                marker = record.anchor.kind.marker
                assert fragment.startswith(f"{marker} {record.anchor.value} ")

    def test_unknown_paradigm(self, quad_dataset):
        with pytest.raises(ValueError):
            build_step2(quad_dataset, "f3")


class TestWriteStep2:
    def test_byte_determinism(self, tmp_path):
        dataset = make_corpus(Task.TASD, n_sentences=20, seed=14)
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_step2(build_step2(dataset, Paradigm.DIET, seed=3), first)
        write_step2(build_step2(dataset, Paradigm.DIET, seed=3), second)
        assert first.read_bytes() == second.read_bytes()

    def test_schema_fields(self, tmp_path, quad_dataset):
        import json

        path = tmp_path / "step2.jsonl"
        write_step2(build_step2(quad_dataset, Paradigm.F2), path)
        row = json.loads(path.read_text(encoding="utf-8").splitlines()[0])
        assert set(row) == {
            "sentence_id",
            "anchor_value",
            "anchor_kind",
            "order",
            "template",
            "arrow",
            "input",
            "target",
        }
        assert row["template"] == "T2"
