"""Reference rankers: alphabetic, frequency, frequency-if, and the
order-n invocation Markov chain.

All rankers return deterministic total orders over their candidate
labels; ties are always resolved (count desc, then lexicographic) so
ranks are well-defined for the evaluation metrics.
"""

import json
from dataclasses import dataclass, field

DEFAULT_MARKOV_ORDER = 3

_HSEP = "\x1f"      # history-tuple separator inside JSON keys


def rank_alphabetic(class_name, vocab):
    """Class members in ascending lexicographic order; [] for unknown classes."""
    members = vocab.class_members.get(class_name)
    if not members:
        return []
    return sorted(members)


@dataclass
class FrequencyTable:
    """Per-class label counts, split by if-condition context."""
    outside: dict = field(default_factory=dict)     # class -> {label: count}
    inside: dict = field(default_factory=dict)

    def merged(self, class_name):
        out = dict(self.outside.get(class_name, {}))
        for label, c in self.inside.get(class_name, {}).items():
            out[label] = out.get(label, 0) + c
        return out

    def to_json_dict(self):
        return {"kind": "frequency", "outside": self.outside,
                "inside": self.inside}

    @classmethod
    def from_json_dict(cls, d):
        return cls(d["outside"], d["inside"])


def train_frequency(records) -> FrequencyTable:
    table = FrequencyTable()
    for rec in records:
        sub = table.inside if rec.in_if else table.outside
        per_class = sub.setdefault(rec.class_name, {})
        per_class[rec.label] = per_class.get(rec.label, 0) + 1
    return table


def _ranked(counts):
    return [label for label, _ in
            sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))]


def rank_frequency(table: FrequencyTable, class_name, in_if=None):
    """Plain ranking merges the sub-tables; the frequency-if variant ranks
    by the selected sub-table and backs off to the merged table for labels
    unseen there."""
    merged = table.merged(class_name)
    if not merged:
        return []
    if in_if is None:
        return _ranked(merged)
    primary = (table.inside if in_if else table.outside).get(class_name, {})
    order = _ranked(primary)
    rest = {lbl: c for lbl, c in merged.items() if lbl not in primary}
    return order + _ranked(rest)


@dataclass
class MarkovModel:
    """Per-class transition counts for orders 2..n plus unigram fallback.

    ``transitions[k]`` maps class -> history tuple (length k-1) -> counts.
    """
    n: int
    transitions: dict = field(default_factory=dict)
    unigrams: dict = field(default_factory=dict)

    def to_json_dict(self):
        trans = {}
        for k, per_class in sorted(self.transitions.items()):
            trans[str(k)] = {
                cls: {_HSEP.join(h): dict(sorted(c.items()))
                      for h, c in sorted(hist.items())}
                for cls, hist in sorted(per_class.items())
            }
        return {"kind": "markov", "n": self.n, "transitions": trans,
                "unigrams": {c: dict(sorted(u.items()))
                             for c, u in sorted(self.unigrams.items())}}

    @classmethod
    def from_json_dict(cls, d):
        transitions = {}
        for k, per_class in d["transitions"].items():
            transitions[int(k)] = {
                c: {tuple(h.split(_HSEP)): dict(counts)
                    for h, counts in hist.items()}
                for c, hist in per_class.items()
            }
        return cls(d["n"], transitions, d["unigrams"])


def class_sequences(records):
    """Label sequences per (file, class), in source order.

    Consecutive means adjacent within the class's own invocation stream;
    other classes' calls may interleave in the file.
    """
    seqs = {}
    for rec in records:
        seqs.setdefault((rec.file, rec.class_name), []).append(rec.label)
    return seqs


def train_markov(records, n=DEFAULT_MARKOV_ORDER) -> MarkovModel:
    if n < 2:
        raise ValueError("Markov order must be >= 2")
    model = MarkovModel(n=n, transitions={k: {} for k in range(2, n + 1)},
                        unigrams={})
    for (file, cls), labels in sorted(class_sequences(records).items()):
        uni = model.unigrams.setdefault(cls, {})
        for i, label in enumerate(labels):
            uni[label] = uni.get(label, 0) + 1
            for k in range(2, n + 1):
                if i >= k - 1:
                    hist = tuple(labels[i - (k - 1):i])
                    per_class = model.transitions[k].setdefault(cls, {})
                    counts = per_class.setdefault(hist, {})
                    counts[label] = counts.get(label, 0) + 1
    return model


def rank_markov(model: MarkovModel, class_name, history):
    """Ranked (label, probability) pairs.

    The longest order whose history tuple was observed wins; probabilities
    are normalized counts at that order.  Labels outside the matched
    distribution are appended with probability 0, ordered by unigram count
    then lexicographically.
    """
    uni = model.unigrams.get(class_name)
    if not uni:
        return []
    history = list(history)
    matched = None
    for k in range(min(model.n, len(history) + 1), 1, -1):
        hist = tuple(history[len(history) - (k - 1):])
        counts = model.transitions.get(k, {}).get(class_name, {}).get(hist)
        if counts:
            matched = counts
            break
    if matched is None:
        matched = uni
    total = sum(matched.values())
    primary = sorted(matched.items(),
                     key=lambda kv: (-kv[1], -uni.get(kv[0], 0), kv[0]))
    ranked = [(label, count / total) for label, count in primary]
    rest = sorted((lbl for lbl in uni if lbl not in matched),
                  key=lambda lbl: (-uni[lbl], lbl))
    ranked.extend((lbl, 0.0) for lbl in rest)
    return ranked


# --- persistence ----------------------------------------------------------

def save_model(model, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(model.to_json_dict(), fh, sort_keys=True)
        fh.write("\n")


def load_model(path):
    with open(path, "r", encoding="utf-8") as fh:
        d = json.load(fh)
    if d["kind"] in ("frequency", "frequency-if"):
        return FrequencyTable.from_json_dict(d)
    if d["kind"] == "markov":
        return MarkovModel.from_json_dict(d)
    raise ValueError(f"unknown model kind {d['kind']!r}")
