from __future__ import annotations

import json

import pytest

from e2tp.core import ElementKind, SentimentTuple, Task
from e2tp.errors import DuplicateId, ParseError, TaskMismatch, UnknownSentimentLabel
from e2tp.ingest import (
    LegacyAdapter,
    convert_legacy,
    load_canonical,
    write_canonical,
)
from corpus import make_corpus


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")


class TestLoadCanonical:
    def test_single_quad_record(self, tmp_path):
        line = json.dumps(
            {
                "id": "r1",
                "text": "The sushi is tasty",
                "tuples": [
                    {
                        "aspect": "sushi",
                        "category": "food quality",
                        "opinion": "tasty",
                        "sentiment": "positive",
                    }
                ],
            }
        )
        path = tmp_path / "data.jsonl"
        write_lines(path, [line])
        dataset = load_canonical(path, Task.ASQP)
        assert len(dataset.records) == 1
        record = dataset.records[0]
        assert record.tuples == (
            SentimentTuple("sushi", "positive", category="food quality", opinion="tasty"),
        )

    def test_null_aspect_becomes_it(self, tmp_path):
        line = json.dumps(
            {"id": "r1", "text": "x y", "tuples": [{"aspect": "NULL", "opinion": "ok fine", "sentiment": "positive"}]}
        )
        path = tmp_path / "data.jsonl"
        write_lines(path, [line])
        dataset = load_canonical(path, Task.ASTE)
        assert dataset.records[0].tuples[0].aspect == "it"

    @pytest.mark.parametrize("flag,expected", [(True, "it"), (False, "null")])
    def test_null_opinion_flag(self, tmp_path, flag, expected):
        line = json.dumps(
            {"id": "r1", "text": "x y", "tuples": [{"aspect": "a", "opinion": "NULL", "sentiment": "positive"}]}
        )
        path = tmp_path / "data.jsonl"
        write_lines(path, [line])
        dataset = load_canonical(path, Task.ASTE, implicit_opinion_as_it=flag)
        assert dataset.records[0].tuples[0].opinion == expected

    def test_values_normalized(self, tmp_path):
        line = json.dumps(
            {"id": "r1", "text": "x", "tuples": [{"aspect": "  Fried  RICE ", "opinion": "ok", "sentiment": "Positive"}]}
        )
        path = tmp_path / "data.jsonl"
        write_lines(path, [line])
        record = load_canonical(path, Task.ASTE).records[0]
        assert record.tuples[0].aspect == "fried rice"
        assert record.tuples[0].sentiment == "positive"

    def test_empty_file(self, tmp_path):
        path = tmp_path / "empty.jsonl"
        path.write_text("", encoding="utf-8")
        assert load_canonical(path, Task.ASTE).records == []

    def test_parse_error_carries_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        write_lines(path, [json.dumps({"id": "a", "text": "x", "tuples": []}), "{nope"])
        with pytest.raises(ParseError) as err:
            load_canonical(path, Task.ASTE)
        assert err.value.line == 2

    def test_duplicate_id(self, tmp_path):
        row = json.dumps({"id": "same", "text": "x", "tuples": []})
        path = tmp_path / "dup.jsonl"
        write_lines(path, [row, row])
        with pytest.raises(DuplicateId):
            load_canonical(path, Task.ASTE)

    def test_wrong_role_set(self, tmp_path):
        line = json.dumps(
            {"id": "r1", "text": "x", "tuples": [{"aspect": "a", "opinion": "o", "sentiment": "positive"}]}
        )
        path = tmp_path / "data.jsonl"
        write_lines(path, [line])
        with pytest.raises(TaskMismatch):
            load_canonical(path, Task.TASD)

    def test_bad_sentiment_label(self, tmp_path):
        line = json.dumps(
            {"id": "r1", "text": "x", "tuples": [{"aspect": "a", "opinion": "o", "sentiment": "great"}]}
        )
        path = tmp_path / "data.jsonl"
        write_lines(path, [line])
        with pytest.raises(ParseError):
            load_canonical(path, Task.ASTE)


class TestWriteCanonical:
    def test_round_trip_preserves_records(self, tmp_path):
        dataset = make_corpus(Task.ASQP, n_sentences=25, seed=3)
        path = tmp_path / "out.jsonl"
        write_canonical(dataset, path)
        loaded = load_canonical(path, Task.ASQP)
        assert loaded.records == dataset.records

    def test_rewrite_is_byte_identical(self, tmp_path):
        dataset = make_corpus(Task.TASD, n_sentences=25, seed=4)
        first, second = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_canonical(dataset, first)
        write_canonical(load_canonical(first, Task.TASD), second)
        assert first.read_bytes() == second.read_bytes()

    def test_large_file_count_preserved(self, tmp_path):
        # mirrors the published TASD train split size
        dataset = make_corpus(Task.TASD, n_sentences=1120, seed=5)
        path = tmp_path / "tasd.jsonl"
        write_canonical(dataset, path)
        assert len(load_canonical(path, Task.TASD).records) == 1120


class TestConvertLegacy:
    def test_aste_line(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(path, ["The sushi is tasty####[('sushi','tasty','POS')]"])
        dataset = convert_legacy(path, Task.ASTE)
        assert dataset.records[0].text == "The sushi is tasty"
        assert dataset.records[0].tuples == (SentimentTuple("sushi", "positive", opinion="tasty"),)

    def test_sentiment_abbreviations(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(
            path,
            [
                "a b####[('a','x','POS'),('a','y','NEU'),('a','z','NEG')]",
            ],
        )
        got = [t.sentiment for t in convert_legacy(path, Task.ASTE).records[0].tuples]
        assert got == ["positive", "neutral", "negative"]

    def test_empty_sentence_rejected(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(path, ["####[]"])
        with pytest.raises(ParseError):
            convert_legacy(path, Task.ASTE)

    def test_arity_violation(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(path, ["x y####[('a','b','c','d','POS')]"])
        with pytest.raises(ParseError):
            convert_legacy(path, Task.ASTE)

    def test_unknown_sentiment_label(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(path, ["x y####[('a','b','WAT')]"])
        with pytest.raises(UnknownSentimentLabel):
            convert_legacy(path, Task.ASTE)

    def test_custom_field_order(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(path, ["x y####[('POS','sushi','tasty')]"])
        adapter = LegacyAdapter(
            field_order=(ElementKind.SENTIMENT, ElementKind.ASPECT, ElementKind.OPINION)
        )
        dataset = convert_legacy(path, Task.ASTE, adapter=adapter)
        assert dataset.records[0].tuples[0] == SentimentTuple("sushi", "positive", opinion="tasty")

    def test_null_aspect_replaced(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(path, ["x y####[('NULL','tasty','POS')]"])
        record = convert_legacy(path, Task.ASTE).records[0]
        assert record.tuples[0].aspect == "it"

    def test_converted_file_round_trips(self, tmp_path):
        path = tmp_path / "legacy.txt"
        write_lines(
            path,
            [
                "The sushi is tasty####[('sushi','tasty','POS')]",
                "service was slow####[('service','slow','NEG')]",
            ],
        )
        dataset = convert_legacy(path, Task.ASTE)
        out = tmp_path / "canonical.jsonl"
        write_canonical(dataset, out)
        assert load_canonical(out, Task.ASTE).records == dataset.records
