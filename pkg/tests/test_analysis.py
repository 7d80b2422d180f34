import json
import math
from collections import Counter

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gedkit.analysis import (
    EditRecord,
    ErrorType,
    Origin,
    TypeDistribution,
    build_discriminator_set,
    classify_edit,
    cluster_distribution,
    format_discriminator_tsv,
    mean_normalized_entropy,
    normalized_entropy,
    pair_edits,
    read_cluster_file,
    read_edit_log,
    strip_diacritics,
    type_distribution,
)
from gedkit.corpus_io import ParallelPair, Provenance, TokenSequence
from gedkit.errors import FormatError


def entropy_base2(counts, k):
    # independent route: base-2 logs, normalized by log2 k
    total = sum(counts)
    h = -sum(c / total * math.log2(c / total) for c in counts if c)
    return h / math.log2(k)


class TestClassify:
    @pytest.mark.parametrize(
        "edit,expected",
        [
            (("delete", ["very"], []), ErrorType.MISSING),
            (("insert", [], ["the"]), ErrorType.EXTRA),
            (("substitute", ["a", "b"], ["b", "a"]), ErrorType.ORDER),
            (("substitute", ["The"], ["the"]), ErrorType.CASE),
            (("substitute", ["krasa"], ["krása"]), ErrorType.DIACR),
            (("substitute", ["."], [","]), ErrorType.PUNCT),
            (("substitute", ["dog"], ["dgo"]), ErrorType.SPELL),
            (("substitute", ["cat"], ["elephant"]), ErrorType.OTHER),
            (("substitute", ["a", "b"], ["c"]), ErrorType.OTHER),
        ],
    )
    def test_examples(self, edit, expected):
        assert classify_edit(edit) is expected

    def test_precedence(self):
        # case beats diacritics when both apply only through case
        assert classify_edit(("substitute", ["Á"], ["á"])) is ErrorType.CASE
        # a swapped pair of case-variants is still an order error
        assert classify_edit(("substitute", ["X", "x"], ["x", "X"])) is ErrorType.ORDER
        # punctuation comes before spelling distance
        assert classify_edit(("substitute", ["!"], ["a"])) is ErrorType.PUNCT

    def test_strip_diacritics(self):
        assert strip_diacritics("krása žluťoučký") == "krasa zlutoucky"

    @settings(max_examples=300, deadline=None)
    @given(
        st.sampled_from(["substitute", "delete", "insert"]),
        st.lists(st.text(min_size=1, max_size=4), max_size=3),
        st.lists(st.text(min_size=1, max_size=4), max_size=3),
    )
    def test_total_and_deterministic(self, kind, a, b):
        t = classify_edit((kind, a, b))
        assert isinstance(t, ErrorType)
        assert classify_edit((kind, a, b)) is t


class TestDistribution:
    def test_empty(self):
        d = type_distribution([])
        assert d.total == 0 and set(d.counts.values()) == {0}
        with pytest.raises(ValueError):
            d.normalized()

    def test_three_missing(self):
        d = type_distribution([("delete", ["x"], [])] * 3)
        assert d.nonzero() == {"MISSING": 3}
        assert d.total == 3

    def test_hand_tally(self):
        log = [
            ("delete", ["very"], []),
            ("substitute", ["dog"], ["dgo"]),
            ("substitute", ["The"], ["the"]),
            ("substitute", ["cat"], ["cta"]),
            ("insert", [], ["a"]),
        ]
        assert type_distribution(log).nonzero() == {"MISSING": 1, "SPELL": 2, "CASE": 1, "EXTRA": 1}

    def test_taxonomy_note(self):
        d = type_distribution([]).as_dict()
        assert "approximation" in d["note"]
        assert TypeDistribution.from_dict(json.loads(json.dumps(d))).counts == type_distribution([]).counts

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.sampled_from([("delete", ["a"], []), ("insert", [], ["b"]), ("substitute", ["A"], ["a"])]), max_size=10),
           st.lists(st.sampled_from([("delete", ["a"], []), ("substitute", ["x"], ["y"])]), max_size=10))
    def test_merge_is_componentwise(self, a, b):
        assert (type_distribution(a) + type_distribution(b)).counts == type_distribution(a + b).counts

    def test_top(self):
        d = TypeDistribution({"A": 1, "B": 5, "C": 5, "D": 0})
        assert d.top(2) == [("B", 5), ("C", 5)]

    def test_clusters(self):
        d = cluster_distribution(["3", "1", "3"])
        assert d.counts == {"1": 1, "3": 2} and d.taxonomy == "clusters"


class TestEntropy:
    def test_uniform(self):
        assert normalized_entropy([5, 5, 5, 5], 4) == pytest.approx(1.0, abs=1e-9)

    def test_point_mass(self):
        assert normalized_entropy([10, 0, 0, 0], 4) == pytest.approx(0.0, abs=1e-9)

    def test_two_one_one(self):
        expected = (0.5 * math.log(2) + 0.5 * math.log(4)) / math.log(4)
        assert expected == pytest.approx(0.75, abs=1e-12)
        assert normalized_entropy([2, 1, 1], 4) == pytest.approx(0.75, abs=1e-9)

    def test_distribution_input(self):
        assert normalized_entropy(TypeDistribution({"a": 2, "b": 2}), 2) == pytest.approx(1.0)

    @pytest.mark.parametrize("counts,k", [([0, 0], 2), ([1, 1], 1), ([1, 1, 1], 2), ([-1, 2], 2)])
    def test_errors(self, counts, k):
        with pytest.raises(ValueError):
            normalized_entropy(counts, k)

    def test_mean(self):
        assert mean_normalized_entropy([([1, 1], 2)]) == pytest.approx(1.0)
        assert mean_normalized_entropy([([1, 1], 2), ([4], 2)]) == pytest.approx(0.5)
        four = [([1, 1], 2), ([4], 2), ([2, 1, 1], 4), ([1, 1, 1, 1], 8)]
        # 1, 0, 0.75 and ln4/ln8 = 2/3
        assert mean_normalized_entropy(four) == pytest.approx((1 + 0 + 0.75 + 2 / 3) / 4, abs=1e-12)
        with pytest.raises(ValueError):
            mean_normalized_entropy([])

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.integers(0, 50), min_size=1, max_size=8).filter(lambda c: sum(c) > 0), st.integers(0, 8))
    def test_range_and_base_independence(self, counts, extra):
        k = max(2, len(counts)) + extra
        h = normalized_entropy(counts, k)
        assert 0.0 <= h <= 1.0
        assert h == pytest.approx(entropy_base2(counts, k), abs=1e-12)
        nz = [c for c in counts if c]
        assert (h == pytest.approx(0.0, abs=1e-12)) == (len(nz) == 1)
        uniform = len(nz) == k and len(set(nz)) == 1
        assert (h == pytest.approx(1.0, abs=1e-12)) == uniform


class TestEditLogs:
    def test_pair_edits(self):
        p = ParallelPair(TokenSequence(tuple("she is very nice".split())), TokenSequence(tuple("she is nice".split())))
        assert pair_edits(p) == [EditRecord("delete", ("very",), ())]

    def test_read_edit_log(self, tmp_path):
        f = tmp_path / "e.jsonl"
        f.write_text('{"sentence": 0, "kind": "delete", "original": ["x"], "corrupted": []}\n')
        assert read_edit_log(f) == [EditRecord("delete", ("x",), ())]
        f.write_text("{}\n")
        with pytest.raises(FormatError):
            read_edit_log(f)

    def test_cluster_file(self, tmp_path):
        f = tmp_path / "c.tsv"
        f.write_text("a -> b\t4\nc -> d\t1\n")
        assert read_cluster_file(f) == ["4", "1"]
        f.write_text("no tab here\n")
        with pytest.raises(FormatError) as exc:
            read_cluster_file(f)
        assert exc.value.line == 1


def pairs(n, tag):
    return [ParallelPair(TokenSequence((f"{tag}{k}", "ok")), TokenSequence((f"{tag}{k}", "bad")), Provenance.AUTHENTIC)
            for k in range(n)]


class TestDiscriminator:
    def test_balanced(self):
        ex = build_discriminator_set(pairs(10, "a"), pairs(10, "s"), 1)
        assert Counter(e.origin for e in ex) == {Origin.AUTHENTIC: 10, Origin.SYNTHETIC: 10}

    def test_downsampling(self):
        ex = build_discriminator_set(pairs(100, "a"), pairs(10, "s"), 1)
        assert Counter(e.origin for e in ex) == {Origin.AUTHENTIC: 10, Origin.SYNTHETIC: 10}
        assert len({e.grammatical for e in ex}) == 20

    def test_deterministic(self):
        a = format_discriminator_tsv(build_discriminator_set(pairs(30, "a"), pairs(12, "s"), 9))
        b = format_discriminator_tsv(build_discriminator_set(pairs(30, "a"), pairs(12, "s"), 9))
        c = format_discriminator_tsv(build_discriminator_set(pairs(30, "a"), pairs(12, "s"), 10))
        assert a == b and a != c
        assert a.splitlines()[0].count("\t") == 2

    def test_empty_side(self):
        with pytest.raises(ValueError):
            build_discriminator_set([], pairs(3, "s"), 0)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 40), st.integers(1, 40), st.integers(0, 1000))
    def test_class_counts_close(self, n_a, n_s, seed):
        ex = build_discriminator_set(pairs(n_a, "a"), pairs(n_s, "s"), seed)
        c = Counter(e.origin for e in ex)
        assert abs(c[Origin.AUTHENTIC] - c[Origin.SYNTHETIC]) <= 1
        assert all(e.grammatical and e.ungrammatical for e in ex)
