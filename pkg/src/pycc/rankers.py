"""Uniform ranker adapters over the baselines and the neural model.

An EvalSample carries everything any model needs for one test point:
class name, if-context flag, the preceding same-class labels in the file
(the Markov history), and the encoded context for the neural model.
"""

import math
from dataclasses import dataclass, field


from .baselines import rank_alphabetic, rank_frequency, rank_markov
from .training import batched_terminal_logits
from .vocab import encode_sample

INF = math.inf


@dataclass
class EvalSample:
    class_name: str
    label: str
    in_if: bool
    history: list
    context_ids: list
    label_id: int
    origin: dict = field(default_factory=dict)


def build_eval_samples(records, vocab):
    """Encode test records; histories come from the raw record stream so
    out-of-vocabulary neighbours still count as context.  Records whose
    label is out of vocabulary are dropped (and counted)."""
    seen = {}
    out = []
    dropped = 0
    for rec in records:
        key = (rec.file, rec.class_name)
        history = list(seen.get(key, []))
        seen.setdefault(key, []).append(rec.label)
        encoded = encode_sample(rec, vocab)
        if encoded is None:
            dropped += 1
            continue
        out.append(EvalSample(
            class_name=rec.class_name, label=rec.label, in_if=rec.in_if,
            history=history, context_ids=encoded.context_ids,
            label_id=encoded.label_id,
            origin={"repo": rec.repo, "file": rec.file}))
    return out, dropped


def _rank_in_list(ranked, label):
    try:
        return float(ranked.index(label) + 1)
    except ValueError:
        return INF


class _ListRanker:
    """Base for rankers that materialize an ordered label list."""

    def ranking(self, sample):
        raise NotImplementedError

    def label_ranks(self, samples):
        ranks = []
        covered = []
        for sample in samples:
            try:
                ranked = self.ranking(sample)
            except Exception:
                ranked = []
            if ranked:
                covered.append(True)
                ranks.append(_rank_in_list(ranked, sample.label))
            else:
                covered.append(False)
                ranks.append(INF)
        return ranks, covered


class AlphabeticRanker(_ListRanker):
    name = "alphabetic"

    def __init__(self, vocab):
        self.vocab = vocab

    def ranking(self, sample):
        return rank_alphabetic(sample.class_name, self.vocab)


class FrequencyRanker(_ListRanker):
    def __init__(self, table, use_if=False):
        self.table = table
        self.use_if = use_if
        self.name = "frequency-if" if use_if else "frequency"

    def ranking(self, sample):
        in_if = sample.in_if if self.use_if else None
        return rank_frequency(self.table, sample.class_name, in_if=in_if)


class MarkovRanker(_ListRanker):
    name = "markov"

    def __init__(self, model):
        self.model = model

    def ranking(self, sample):
        return [label for label, _ in
                rank_markov(self.model, sample.class_name, sample.history)]


class NeuralRanker:
    """Neural model with the class-member candidate filter applied, the
    same restriction the serving path uses; unknown classes fall back to
    the full method set (full coverage)."""

    def __init__(self, model, vocab, name="neural", class_filter=True):
        self.model = model
        self.vocab = vocab
        self.name = name
        self.class_filter = class_filter

    def _candidate_ids(self, class_name):
        if self.class_filter:
            members = self.vocab.class_members.get(class_name)
            if members:
                return sorted(self.vocab.token_to_id[m] for m in members
                              if m in self.vocab.token_to_id)
        return self.vocab.method_ids

    def label_ranks(self, samples):
        from .vocab import CompletionSample
        wrapped = [CompletionSample(s.context_ids, s.label_id, s.class_name, {})
                   for s in samples]
        logits = batched_terminal_logits(self.model, wrapped)
        ranks = []
        id_to_token = self.vocab.id_to_token
        for i, sample in enumerate(samples):
            cand = self._candidate_ids(sample.class_name)
            if sample.label_id not in cand:
                ranks.append(INF)
                continue
            scores = logits[i]
            s_label = scores[sample.label_id - 1]
            label_tok = id_to_token[sample.label_id]
            rank = 1
            for c in cand:
                s = scores[c - 1]
                if s > s_label or (s == s_label and id_to_token[c] < label_tok):
                    rank += 1
            ranks.append(float(rank))
        return ranks, [True] * len(samples)

    def ranking(self, sample):
        from .neural import predict
        cand = set(self._candidate_ids(sample.class_name))
        suggestions, _ = predict(self.model, sample.context_ids,
                                 k=len(cand), vocab=self.vocab,
                                 candidate_filter=cand)
        return [s.token for s in suggestions]
