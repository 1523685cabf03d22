"""Vocabulary with frequency thresholding and per-snippet OoV encoding.

Token ids run 1..V in descending corpus frequency (ties lexicographic);
id 0 is padding and never assigned.  Within one sample the i-th distinct
out-of-vocabulary token becomes V+i, so repeated OoV tokens keep a
consistent identity inside the snippet but not across snippets.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .analysis import EOS_TOKEN

DEFAULT_FREQ_THRESHOLD = 500        # corpus-scale default; desk runs lower it
DEFAULT_BUCKET_BOUNDS = (100, 400)


class EmptyCorpusError(ValueError):
    pass


@dataclass
class Vocabulary:
    token_to_id: dict
    id_to_token: list               # index 0 is the padding placeholder
    freq_threshold: int
    method_ids: list                # sorted token ids that ever appear as labels
    class_members: dict             # class_name -> sorted list of label tokens

    pad_id = 0
    eos_token = EOS_TOKEN

    @property
    def V(self):
        return len(self.id_to_token) - 1

    @property
    def eos_id(self):
        return self.token_to_id[EOS_TOKEN]

    def to_json_dict(self):
        return {
            "version": 1,
            "V": self.V,
            "freq_threshold": self.freq_threshold,
            "tokens": self.id_to_token[1:],
            "method_ids": self.method_ids,
            "class_members": {k: sorted(v) for k, v in sorted(self.class_members.items())},
        }

    @classmethod
    def from_json_dict(cls, d):
        tokens = d["tokens"]
        token_to_id = {tok: i + 1 for i, tok in enumerate(tokens)}
        return cls(token_to_id, ["<pad>"] + list(tokens), d["freq_threshold"],
                   list(d["method_ids"]),
                   {k: list(v) for k, v in d["class_members"].items()})

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))

    def content_hash(self):
        blob = json.dumps(self.to_json_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()[:16]


def build_vocabulary(records, freq_threshold=DEFAULT_FREQ_THRESHOLD) -> Vocabulary:
    """Build from training records only (context tokens plus labels).

    The end-of-sequence token is structural and always included; every
    other token must clear the frequency threshold.
    """
    counts = {}
    pair_seen = set()
    n_records = 0
    for rec in records:
        n_records += 1
        for tok in rec.context_tokens:
            counts[tok] = counts.get(tok, 0) + 1
        counts[rec.label] = counts.get(rec.label, 0) + 1
        pair_seen.add((rec.class_name, rec.label))
    if n_records == 0:
        raise EmptyCorpusError("empty corpus")

    kept = [tok for tok, c in counts.items()
            if c >= freq_threshold or tok == EOS_TOKEN]
    kept.sort(key=lambda tok: (-counts[tok], tok))
    token_to_id = {tok: i + 1 for i, tok in enumerate(kept)}

    label_tokens = {label for _, label in pair_seen}
    method_ids = sorted(token_to_id[t] for t in label_tokens if t in token_to_id)
    class_members = {}
    for cls, label in sorted(pair_seen):
        if label in token_to_id:
            class_members.setdefault(cls, []).append(label)
    return Vocabulary(token_to_id, ["<pad>"] + kept, freq_threshold,
                      method_ids, class_members)


@dataclass
class CompletionSample:
    context_ids: list
    label_id: int
    class_name: str
    origin: dict                    # {repo, file, span}

    def to_json_dict(self):
        return {"context_ids": self.context_ids, "label_id": self.label_id,
                "class_name": self.class_name, "origin": self.origin}

    @classmethod
    def from_json_dict(cls, d):
        return cls(d["context_ids"], d["label_id"], d["class_name"], d["origin"])


def encode_sample(record, vocab: Vocabulary):
    """Encode one record; returns None when the label is out of vocabulary."""
    label_id = vocab.token_to_id.get(record.label)
    if label_id is None:
        return None
    ids = []
    oov = {}
    V = vocab.V
    for tok in record.context_tokens:
        tid = vocab.token_to_id.get(tok)
        if tid is None:
            if tok not in oov:
                oov[tok] = V + len(oov) + 1
            tid = oov[tok]
        ids.append(tid)
    return CompletionSample(
        context_ids=ids, label_id=label_id, class_name=record.class_name,
        origin={"repo": record.repo, "file": record.file,
                "span": list(record.span)})


def encode_records(records, vocab: Vocabulary):
    """Encode a stream; returns (samples, dropped_count)."""
    samples = []
    dropped = 0
    for rec in records:
        sample = encode_sample(rec, vocab)
        if sample is None:
            dropped += 1
        else:
            samples.append(sample)
    return samples, dropped


@dataclass
class Bucket:
    ids: np.ndarray                 # (n, L) int32, zero-padded
    mask: np.ndarray                # (n, L) uint8, 1 at the terminal position
    labels: np.ndarray              # (n,) int32
    lengths: np.ndarray             # (n,) int32
    sample_index: np.ndarray        # (n,) int32, indices into the input list


def bucket_and_pad(samples, bucket_bounds=DEFAULT_BUCKET_BOUNDS, T=1000):
    """Split samples into three buckets by length and pad each bucket.

    Lengths include the end-of-sequence token.  Sequences longer than T+1
    are truncated from the front so the label-bearing terminal is kept.
    The mask is 1 exactly at the terminal position of each row.
    """
    b1, b2 = bucket_bounds
    if not (0 < b1 < b2 <= T):
        raise ValueError("bucket bounds must satisfy 0 < b1 < b2 <= T")
    groups = [[], [], []]
    for idx, sample in enumerate(samples):
        ids = sample.context_ids
        if len(ids) > T + 1:
            ids = ids[len(ids) - (T + 1):]
        n = len(ids)
        which = 0 if n <= b1 else 1 if n <= b2 else 2
        groups[which].append((idx, ids))

    buckets = []
    for group in groups:
        if not group:
            buckets.append(Bucket(
                ids=np.zeros((0, 0), np.int32), mask=np.zeros((0, 0), np.uint8),
                labels=np.zeros(0, np.int32), lengths=np.zeros(0, np.int32),
                sample_index=np.zeros(0, np.int32)))
            continue
        max_len = max(len(ids) for _, ids in group)
        n = len(group)
        id_mat = np.zeros((n, max_len), np.int32)
        mask = np.zeros((n, max_len), np.uint8)
        labels = np.zeros(n, np.int32)
        lengths = np.zeros(n, np.int32)
        index = np.zeros(n, np.int32)
        for row, (idx, ids) in enumerate(group):
            id_mat[row, :len(ids)] = ids
            mask[row, len(ids) - 1] = 1
            labels[row] = samples[idx].label_id
            lengths[row] = len(ids)
            index[row] = idx
        buckets.append(Bucket(id_mat, mask, labels, lengths, index))
    return buckets
