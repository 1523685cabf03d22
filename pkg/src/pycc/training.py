"""Buffer-based stateful training with truncated backpropagation.

The buffer holds one sample per row within a length bucket; every step
feeds the next bptt-sized slice of all rows, carrying LSTM state across
slices and resetting it when fresh samples are loaded.  The learning
rate decays exponentially per epoch, with a linear multi-worker warm-up
ramp over the first four epochs.
"""

from dataclasses import dataclass

import numpy as np

from .neural import (NeuralModel, TrainConfig, loss_and_gradients,
                     zero_states, forward_chunk)
from .vocab import bucket_and_pad

WARMUP_EPOCHS = 4


class TrainingDiverged(RuntimeError):
    def __init__(self, epoch, step, rate, loss):
        super().__init__(
            f"non-finite loss {loss} at epoch {epoch} step {step} rate {rate:.6g}")
        self.diagnostics = {"epoch": epoch, "step": step, "rate": rate,
                            "loss": repr(loss)}


def learning_rate(config: TrainConfig, epoch: int) -> float:
    """Exponential decay; multi-worker runs ramp linearly to
    n_worker/alpha over the first four epochs and hold it after."""
    rate = config.base_lr * config.lr_decay ** epoch
    if config.n_worker == 1:
        return rate
    target = config.n_worker / config.warmup_alpha
    ramp = 1.0 + (target - 1.0) * min(epoch, WARMUP_EPOCHS) / WARMUP_EPOCHS
    return rate * ramp


class Adam:
    def __init__(self, params, beta1=0.9, beta2=0.999, eps=1e-8):
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads, lr):
        self.t += 1
        b1, b2 = self.beta1, self.beta2
        bc1 = 1.0 - b1 ** self.t
        bc2 = 1.0 - b2 ** self.t
        for name, p in params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= b1
            m += (1 - b1) * g
            v *= b2
            v += (1 - b2) * (g * g)
            p -= (lr / bc1) * m / (np.sqrt(v / bc2) + self.eps)


@dataclass
class TrainingBuffer:
    """Rows of one bucket batch: sample ids, shared cursor, LSTM states."""
    ids: np.ndarray             # (rows, L) int32
    mask: np.ndarray            # (rows, L) uint8
    labels: np.ndarray          # (rows,) int32
    sample_ids: np.ndarray      # which samples occupy the rows
    bptt: int
    cursor: int = 0
    states: list = None         # reset to zeros on load (sample turnover)

    def chunks(self):
        L = self.ids.shape[1]
        while self.cursor < L:
            sl = slice(self.cursor, min(self.cursor + self.bptt, L))
            chunk_mask = self.mask[:, sl]
            rows, _ = np.nonzero(chunk_mask)
            yield (self.ids[:, sl], chunk_mask, self.labels[rows])
            self.cursor += self.bptt


def batches_for_epoch(buckets, batch_size, rng):
    """Shuffled (bucket, row-index-array) batches spanning all buckets."""
    batches = []
    for bucket in buckets:
        n = bucket.ids.shape[0]
        if n == 0:
            continue
        perm = rng.permutation(n)
        for start in range(0, n, batch_size):
            batches.append((bucket, perm[start:start + batch_size]))
    order = rng.permutation(len(batches))
    return [batches[i] for i in order]


def train(model: NeuralModel, train_samples, config: TrainConfig,
          valid_samples=None, method_ids=None, log=None):
    """Train in place; returns per-epoch metrics.

    Samples are bucketed by length, shuffled per epoch, and streamed
    through the buffer in bptt-sized chunks with stateful carry.
    """
    if not train_samples:
        raise ValueError("empty training set")
    buckets = bucket_and_pad(train_samples, config.bucket_bounds, config.lookback)
    rng = np.random.default_rng(config.seed)
    dropout_rng = np.random.default_rng(config.seed + 0x5EED)
    optimizer = Adam(model.params)
    history = []
    for epoch in range(config.epochs):
        rate = learning_rate(config, epoch)
        ce_sum = 0.0
        ce_count = 0
        step = 0
        for bucket, rows in batches_for_epoch(buckets, config.batch, rng):
            buffer = TrainingBuffer(
                ids=bucket.ids[rows], mask=bucket.mask[rows],
                labels=bucket.labels[rows], sample_ids=bucket.sample_index[rows],
                bptt=config.bptt)
            states = zero_states(model, len(rows))
            for ids, mask, labels in buffer.chunks():
                loss, grads, states = loss_and_gradients(
                    model, ids, mask, labels, states, train=True,
                    rng=dropout_rng)
                step += 1
                if not np.isfinite(loss):
                    raise TrainingDiverged(epoch, step, rate, loss)
                k = len(labels)
                if k:
                    ce_sum += loss * k
                    ce_count += k
                    optimizer.step(model.params, grads, rate)
                    model.params["L"][0] = 0.0      # padding row stays zero
        entry = {"epoch": epoch, "loss": ce_sum / max(ce_count, 1),
                 "rate": rate}
        if valid_samples:
            top1, top5 = topk_accuracy(model, valid_samples, method_ids)
            entry["val_top1"] = top1
            entry["val_top5"] = top5
        history.append(entry)
        if log is not None:
            log(entry)
    return history


def batched_terminal_logits(model: NeuralModel, samples, batch=None):
    """Terminal logits for many samples at once; returns (N, V) float32.

    Mirrors terminal_logits but streams bucket batches through the
    chunked, stateful path.
    """
    cfg = model.config
    batch = batch or cfg.batch
    out = np.zeros((len(samples), model.V), dtype=np.float32)
    buckets = bucket_and_pad(samples, cfg.bucket_bounds, cfg.lookback)
    for bucket in buckets:
        n = bucket.ids.shape[0]
        for start in range(0, n, batch):
            rows = np.arange(start, min(start + batch, n))
            ids = bucket.ids[rows]
            mask = bucket.mask[rows]
            states = zero_states(model, len(rows))
            collected = {}
            for c0 in range(0, ids.shape[1], cfg.bptt):
                sl = slice(c0, c0 + cfg.bptt)
                logits, states, cache = forward_chunk(
                    model, ids[:, sl], mask[:, sl], states, train=False)
                for j, row in enumerate(cache["rows"]):
                    collected[int(row)] = logits[j]
            for j, row in enumerate(rows):
                out[bucket.sample_index[row]] = collected[j]
    return out


def topk_accuracy(model: NeuralModel, samples, method_ids, ks=(1, 5)):
    """Top-k accuracy over the method set, unrestricted by class."""
    logits = batched_terminal_logits(model, samples)
    mids = np.asarray(method_ids, dtype=np.int64)
    scores = logits[:, mids - 1]
    labels = np.asarray([s.label_id for s in samples])
    hits = {k: 0 for k in ks}
    kmax = max(ks)
    top = np.argpartition(-scores, min(kmax, scores.shape[1] - 1), axis=1)[:, :kmax]
    for i, label in enumerate(labels):
        ranked = top[i][np.argsort(-scores[i, top[i]], kind="stable")]
        ranked_ids = mids[ranked]
        for k in ks:
            if label in ranked_ids[:k]:
                hits[k] += 1
    n = len(samples)
    return hits[1] / n, hits[5] / n
