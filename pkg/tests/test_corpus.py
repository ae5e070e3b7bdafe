import json
import logging

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from smscreen.corpus import (
    Corpus,
    CorpusFormatError,
    LabeledPost,
    clean_text,
    deduplicate,
    load_corpus,
    save_corpus,
)
from smscreen.labels import ClassLabel, UnknownLabelError, parse_label

from conftest import make_corpus


class TestCleanText:
    def test_url_mention_punctuation(self):
        assert clean_text("Visit https://x.co NOW @bob!!") == "visit now"

    def test_empty(self):
        assert clean_text("") == ""

    def test_fixed_point(self):
        assert clean_text("already clean text") == "already clean text"

    def test_www_url(self):
        assert clean_text("see www.example.com/page for more") == "see for more"

    def test_non_ascii_removed(self):
        assert clean_text("café naïve") == "caf na ve"

    def test_whitespace_collapsed(self):
        assert clean_text("  a \t b \n\n c  ") == "a b c"

    def test_mention_inside_sentence(self):
        assert clean_text("hey @user_123 what's up") == "hey what s up"

    @given(st.text(max_size=200))
    @settings(max_examples=300, deadline=None)
    def test_idempotent(self, raw):
        once = clean_text(raw)
        assert clean_text(once) == once

    @given(st.text(max_size=200))
    @settings(max_examples=200, deadline=None)
    def test_output_alphabet(self, raw):
        out = clean_text(raw)
        assert out == out.strip()
        assert all(c in "abcdefghijklmnopqrstuvwxyz0123456789 " for c in out)
        assert "  " not in out


class TestParseLabel:
    def test_case_and_separators(self):
        assert parse_label("Personality Disorder") is ClassLabel.PERSONALITY_DISORDER
        assert parse_label("personality_disorder") is ClassLabel.PERSONALITY_DISORDER
        assert parse_label("AGE CB") is ClassLabel.AGE_CB
        assert parse_label("Age-CB") is ClassLabel.AGE_CB

    def test_unknown(self):
        with pytest.raises(UnknownLabelError):
            parse_label("depresion")


class TestLoadCorpus:
    def test_csv_happy_path(self, tmp_path):
        path = tmp_path / "posts.csv"
        path.write_text(
            "text,label,extra\n"
            "feeling anxious,anxiety,x\n"
            "fun hobby night,non_suicide,y\n"
            "bipolar meds,bipolar,z\n"
        )
        c = load_corpus(path, "csv")
        assert len(c) == 3
        assert c.posts[0].clean_text == "feeling anxious"
        assert c.posts[0].label is ClassLabel.ANXIETY

    def test_csv_unknown_label_names_line(self, tmp_path):
        path = tmp_path / "posts.csv"
        path.write_text("text,label\nok,anxiety\nbad,depresion\n")
        with pytest.raises(CorpusFormatError, match=r":3:"):
            load_corpus(path, "csv")

    def test_jsonl_duplicates_retained(self, tmp_path):
        path = tmp_path / "posts.jsonl"
        row = json.dumps({"text": "same text", "label": "stress"})
        path.write_text(row + "\n" + row + "\n")
        c = load_corpus(path, "jsonl")
        assert len(c) == 2
        assert c.posts[0].id != c.posts[1].id

    def test_jsonl_bad_json_names_line(self, tmp_path):
        path = tmp_path / "posts.jsonl"
        path.write_text('{"text": "ok", "label": "stress"}\n{oops\n')
        with pytest.raises(CorpusFormatError, match=r":2:"):
            load_corpus(path, "jsonl")

    def test_jsonl_missing_field(self, tmp_path):
        path = tmp_path / "posts.jsonl"
        path.write_text('{"text": "no label here"}\n')
        with pytest.raises(CorpusFormatError, match=r":1:"):
            load_corpus(path, "jsonl")

    def test_csv_missing_header(self, tmp_path):
        path = tmp_path / "posts.csv"
        path.write_text("body,tag\nx,y\n")
        with pytest.raises(CorpusFormatError, match="header"):
            load_corpus(path, "csv")

    def test_explicit_ids_kept(self, tmp_path):
        path = tmp_path / "posts.jsonl"
        path.write_text(json.dumps({"id": "abc", "text": "t", "label": "stress"}) + "\n")
        assert load_corpus(path).posts[0].id == "abc"

    def test_label_aliases_accepted(self, tmp_path):
        path = tmp_path / "posts.csv"
        path.write_text("text,label\nsomething,Personality Disorder\n")
        assert load_corpus(path).posts[0].label is ClassLabel.PERSONALITY_DISORDER

    def test_round_trip(self, tmp_path):
        src = tmp_path / "src.jsonl"
        rows = [
            {"text": "Feeling very anxious TODAY!", "label": "anxiety", "source": "unit"},
            {"text": "stress and deadlines", "label": "stress"},
        ]
        src.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
        first = load_corpus(src)
        out = tmp_path / "out.jsonl"
        save_corpus(first, out)
        assert load_corpus(out) == first


class TestCorpusInvariants:
    def test_class_counts_match_recount(self):
        c = make_corpus([("a b", ClassLabel.STRESS), ("c d", ClassLabel.STRESS), ("e", ClassLabel.SUICIDE)])
        assert c.class_counts == {ClassLabel.STRESS: 2, ClassLabel.SUICIDE: 1}

    def test_duplicate_id_rejected(self):
        posts = [
            LabeledPost.make("one", ClassLabel.STRESS, post_id="x"),
            LabeledPost.make("two", ClassLabel.STRESS, post_id="x"),
        ]
        with pytest.raises(ValueError, match="duplicate post id"):
            Corpus(posts)


class TestDeduplicate:
    def test_conflicting_labels_first_wins(self, caplog):
        c = make_corpus([("same words", ClassLabel.STRESS), ("same words", ClassLabel.SUICIDE)])
        with caplog.at_level(logging.WARNING):
            d = deduplicate(c)
        assert len(d) == 1
        assert d.posts[0].label is ClassLabel.STRESS
        assert "conflicting label" in caplog.text

    def test_distinct_unchanged(self):
        c = make_corpus([("one post", ClassLabel.STRESS), ("another post", ClassLabel.STRESS)])
        assert deduplicate(c) == c

    def test_empty(self):
        assert len(deduplicate(Corpus([]))) == 0

    def test_idempotent_and_never_grows(self):
        c = make_corpus(
            [("x y", ClassLabel.STRESS), ("x y", ClassLabel.STRESS), ("z", ClassLabel.SUICIDE)]
        )
        once = deduplicate(c)
        assert len(once) <= len(c)
        assert deduplicate(once) == once

    def test_no_shared_clean_text_after(self):
        rows = [(t, ClassLabel.STRESS) for t in ["a", "b", "a", "c", "b", "a"]]
        d = deduplicate(make_corpus(rows))
        texts = [p.clean_text for p in d]
        assert len(texts) == len(set(texts))

    def test_preserves_input_order(self):
        c = make_corpus(
            [("first", ClassLabel.STRESS), ("second", ClassLabel.STRESS), ("first", ClassLabel.STRESS)]
        )
        d = deduplicate(c)
        assert [p.clean_text for p in d] == ["first", "second"]
