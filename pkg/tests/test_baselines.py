import numpy as np
import pytest

from pycc.analysis import CallSiteRecord
from pycc.baselines import (
    FrequencyTable, MarkovModel, load_model, rank_alphabetic, rank_frequency,
    rank_markov, save_model, train_frequency, train_markov,
)
from pycc.vocab import Vocabulary


def rec(label, cls="os", file="f.py", in_if=False):
    return CallSiteRecord(repo="r", file=file, class_name=cls, label=label,
                          context_tokens=["x", "."], in_if=in_if, span=(0, 1))


def vocab_with_members(members):
    tokens = sorted({m for ms in members.values() for m in ms}) + ["."]
    return Vocabulary.from_json_dict({
        "version": 1, "V": len(tokens), "freq_threshold": 1, "tokens": tokens,
        "method_ids": list(range(1, len(tokens))),
        "class_members": members})


class TestAlphabetic:
    def test_sorted_members(self):
        vocab = vocab_with_members({"os": ["remove", "rename", "write"]})
        assert rank_alphabetic("os", vocab) == ["remove", "rename", "write"]

    def test_two_members(self):
        vocab = vocab_with_members({"os": ["b", "a"]})
        assert rank_alphabetic("os", vocab) == ["a", "b"]

    def test_unknown_class_empty(self):
        vocab = vocab_with_members({"os": ["a"]})
        assert rank_alphabetic("numpy", vocab) == []


class TestFrequency:
    def test_plain_ranking_counting_oracle(self):
        records = [rec("a")] * 3 + [rec("c")] * 2 + [rec("b")]
        table = train_frequency(records)
        assert rank_frequency(table, "os") == ["a", "c", "b"]

    def test_if_variant_with_backoff(self):
        records = ([rec("read")] * 5 + [rec("write")] +
                   [rec("exists", in_if=True)] * 3 + [rec("read", in_if=True)])
        table = train_frequency(records)
        assert rank_frequency(table, "os", in_if=True) == \
            ["exists", "read", "write"]

    def test_counts_partition(self):
        records = [rec("a"), rec("a", in_if=True), rec("b")]
        table = train_frequency(records)
        total = sum(table.outside["os"].values()) + sum(table.inside["os"].values())
        assert total == 3

    def test_singleton(self):
        table = train_frequency([rec("x")])
        assert rank_frequency(table, "os") == ["x"]
        assert rank_frequency(table, "os", in_if=True) == ["x"]
        assert rank_frequency(table, "os", in_if=False) == ["x"]

    def test_unknown_class_empty(self):
        table = train_frequency([rec("x")])
        assert rank_frequency(table, "numpy") == []

    def test_identical_subtables_degenerate_to_plain(self):
        records = [rec("a"), rec("b"), rec("a"),
                   rec("a", in_if=True), rec("b", in_if=True), rec("a", in_if=True)]
        table = train_frequency(records)
        plain = rank_frequency(table, "os")
        assert rank_frequency(table, "os", in_if=True) == plain
        assert rank_frequency(table, "os", in_if=False) == plain

    def test_ties_lexicographic(self):
        records = [rec("b"), rec("a")]
        table = train_frequency(records)
        assert rank_frequency(table, "os") == ["a", "b"]

    def test_json_round_trip(self, tmp_path):
        table = train_frequency([rec("a"), rec("b", in_if=True)])
        path = str(tmp_path / "freq.json")
        save_model(table, path)
        loaded = load_model(path)
        assert isinstance(loaded, FrequencyTable)
        assert loaded.to_json_dict() == table.to_json_dict()


def seq_records(sequences, cls="os"):
    """sequences: list of label lists, one per synthetic file."""
    records = []
    for i, labels in enumerate(sequences):
        for label in labels:
            records.append(rec(label, cls=cls, file=f"f{i}.py"))
    return records


def brute_force_markov(records, class_name, history, n):
    """Independent oracle: recount windows straight from the raw records."""
    seqs = {}
    for r in records:
        seqs.setdefault((r.file, r.class_name), []).append(r.label)
    class_seqs = [labels for (_, cls), labels in sorted(seqs.items())
                  if cls == class_name]
    if not class_seqs:
        return []
    unigrams = {}
    for labels in class_seqs:
        for lbl in labels:
            unigrams[lbl] = unigrams.get(lbl, 0) + 1
    history = list(history)
    for k in range(min(n, len(history) + 1), 1, -1):
        suffix = history[len(history) - (k - 1):]
        counts = {}
        for labels in class_seqs:
            for i in range(len(labels)):
                if i >= k - 1 and labels[i - (k - 1):i] == suffix:
                    counts[labels[i]] = counts.get(labels[i], 0) + 1
        if counts:
            total = sum(counts.values())
            ranked = sorted(counts.items(),
                            key=lambda kv: (-kv[1], -unigrams.get(kv[0], 0), kv[0]))
            out = [(lbl, c / total) for lbl, c in ranked]
            rest = sorted((l for l in unigrams if l not in counts),
                          key=lambda l: (-unigrams[l], l))
            return out + [(l, 0.0) for l in rest]
    total = sum(unigrams.values())
    ranked = sorted(unigrams.items(),
                    key=lambda kv: (-kv[1], -unigrams.get(kv[0], 0), kv[0]))
    return [(lbl, c / total) for lbl, c in ranked]


class TestMarkov:
    def test_three_sequence_example(self):
        records = seq_records([["A", "B", "C"], ["A", "B", "D"], ["A", "B", "C"]])
        model = train_markov(records, n=3)
        ranked = rank_markov(model, "os", ["A", "B"])
        assert ranked[0] == ("C", pytest.approx(2 / 3))
        assert ranked[1] == ("D", pytest.approx(1 / 3))

    def test_single_invocation_only_unigrams(self):
        records = seq_records([["A"], ["A"], ["B"]])
        model = train_markov(records, n=3)
        assert model.transitions[2] == {} and model.transitions[3] == {}
        assert rank_markov(model, "os", [])[0][0] == "A"

    def test_empty_history_unigram_ranking(self):
        records = seq_records([["A", "B", "A"]])
        model = train_markov(records, n=3)
        ranked = rank_markov(model, "os", [])
        assert ranked[0] == ("A", pytest.approx(2 / 3))

    def test_backoff_trace(self):
        # (X, B) never seen at order 3 -> order 2 history (B,) decides;
        # (Y,) unseen entirely -> unigram ranking.
        records = seq_records([["A", "B", "C"], ["A", "B", "C"],
                               ["D", "B", "E"], ["F"]])
        model = train_markov(records, n=3)
        order2 = rank_markov(model, "os", ["X", "B"])
        assert order2[0][0] == "C" and order2[0][1] == pytest.approx(2 / 3)
        unigram = rank_markov(model, "os", ["Y"])
        assert unigram[0][0] == "B"

    def test_unknown_class_empty(self):
        model = train_markov(seq_records([["A", "B"]]), n=3)
        assert rank_markov(model, "numpy", []) == []

    def test_order_validation(self):
        with pytest.raises(ValueError):
            train_markov([], n=1)

    def test_brute_force_oracle_random_corpora(self):
        rng = np.random.default_rng(42)
        labels = [f"m{i}" for i in range(8)]
        classes = ["os", "numpy", "str"]
        for trial in range(15):
            n = int(rng.integers(2, 5))
            n_files = int(rng.integers(1, 6))
            records = []
            for f in range(n_files):
                for cls in classes:
                    length = int(rng.integers(0, 14))
                    for lbl in rng.choice(labels, size=length):
                        records.append(rec(str(lbl), cls=cls, file=f"f{f}.py"))
            assert len(records) <= 1000
            model = train_markov(records, n=n)
            for cls in classes:
                for hist_len in range(0, n + 1):
                    history = [str(x) for x in rng.choice(labels, size=hist_len)]
                    got = rank_markov(model, cls, history)
                    want = brute_force_markov(records, cls, history, n)
                    assert got == want, (trial, cls, history)

    def test_total_order_deterministic(self):
        records = seq_records([["A", "B"], ["B", "A"]])
        model = train_markov(records, n=2)
        a = rank_markov(model, "os", ["A"])
        b = rank_markov(model, "os", ["A"])
        assert a == b
        assert len({lbl for lbl, _ in a}) == len(a)

    def test_json_round_trip(self, tmp_path):
        records = seq_records([["A", "B", "C"], ["A", "B", "D"]])
        model = train_markov(records, n=3)
        path = str(tmp_path / "markov.json")
        save_model(model, path)
        loaded = load_model(path)
        assert isinstance(loaded, MarkovModel)
        assert rank_markov(loaded, "os", ["A", "B"]) == \
            rank_markov(model, "os", ["A", "B"])
