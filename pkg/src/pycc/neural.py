"""Stacked LSTM with tied predicted-embedding output.

The embedding matrix doubles as the output classifier: the final hidden
state is projected to embedding space (h_T @ A) and scored against the
first V embedding rows plus a bias.  Row 0 of the embedding is padding
(all zeros, never trained); rows V+1..V+oov_slots form a shared pool for
per-snippet out-of-vocabulary ids, used on the input side only.
"""

import json
from dataclasses import dataclass, asdict

import numpy as np

from . import kernels

DTYPE = np.float32


@dataclass
class TrainConfig:
    base_lr: float = 0.002
    lr_decay: float = 0.97
    layers: int = 2
    hidden: int = 100           # d_h
    embed: int = 150            # d_x
    lookback: int = 1000        # T
    bptt: int = 100             # T_RNN
    batch: int = 256            # d_b
    dropout_keep: float = 0.8
    l2: float = 1e-5
    clip_norm: float = 10.0
    n_worker: int = 1
    warmup_alpha: float = 4.0
    epochs: int = 10
    seed: int = 1
    oov_slots: int = 50
    bucket_bounds: tuple = (100, 400)

    def __post_init__(self):
        if self.bptt > self.lookback:
            raise ValueError("bptt chunk cannot exceed the lookback window")
        self.bucket_bounds = tuple(self.bucket_bounds)

    def to_json_dict(self):
        d = asdict(self)
        d["bucket_bounds"] = list(self.bucket_bounds)
        return d

    @classmethod
    def from_json_dict(cls, d):
        known = {f for f in cls.__dataclass_fields__}
        return cls(**{k: v for k, v in d.items() if k in known})

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


@dataclass
class NeuralModel:
    config: TrainConfig
    V: int
    params: dict                # name -> ndarray
    vocab_hash: str = ""
    model_id: str = "neural"

    @property
    def dtype(self):
        return self.params["L"].dtype

    @property
    def v_ext(self):
        return self.params["L"].shape[0]

    def layer_names(self, layer):
        return f"Wx{layer}", f"Wh{layer}", f"b{layer}"

    def weight_names(self):
        """Weight matrices subject to L2 and quantization (not L, not biases)."""
        names = []
        for layer in range(self.config.layers):
            names += [f"Wx{layer}", f"Wh{layer}"]
        names.append("A")
        return names

    def parameter_count(self):
        return sum(int(p.size) for p in self.params.values())

    def dense_equivalent_count(self):
        """Parameter count had Eq-5-style dense classification been used."""
        tied = self.parameter_count()
        d_h, d_x = self.config.hidden, self.config.embed
        return tied - (d_h * d_x) + self.V * d_h


def init_model(config: TrainConfig, V: int, seed=None, dtype=DTYPE,
               vocab_hash="", init_scale=0.05) -> NeuralModel:
    """Fresh parameters: uniform(-0.05, 0.05) embeddings and LSTM weights,
    Glorot-range projection, zero biases with forget gate bias 1."""
    rng = np.random.default_rng(config.seed if seed is None else seed)
    H, d_x = config.hidden, config.embed
    v_ext = V + config.oov_slots + 1
    params = {}
    params["L"] = rng.uniform(-init_scale, init_scale, (v_ext, d_x)).astype(dtype)
    params["L"][0] = 0.0
    d_in = d_x
    for layer in range(config.layers):
        params[f"Wx{layer}"] = rng.uniform(-init_scale, init_scale,
                                           (d_in, 4 * H)).astype(dtype)
        params[f"Wh{layer}"] = rng.uniform(-init_scale, init_scale,
                                           (H, 4 * H)).astype(dtype)
        b = np.zeros(4 * H, dtype=dtype)
        b[H:2 * H] = 1.0            # forget-gate bias
        params[f"b{layer}"] = b
        d_in = H
    r = np.sqrt(6.0 / (H + d_x))
    params["A"] = rng.uniform(-r, r, (H, d_x)).astype(dtype)
    params["b_out"] = np.zeros(V, dtype=dtype)
    return NeuralModel(config=config, V=V, params=params, vocab_hash=vocab_hash)


def zero_states(model, B):
    H = model.config.hidden
    return [(np.zeros((B, H), model.dtype), np.zeros((B, H), model.dtype))
            for _ in range(model.config.layers)]


def map_input_ids(ids, V, oov_slots):
    """Fold per-snippet OoV ids (> V) into the shared embedding pool."""
    ids = np.asarray(ids)
    if np.any(ids < 0):
        raise ValueError("negative token id")
    out = ids.copy()
    over = out > V
    if np.any(over):
        out[over] = V + 1 + (out[over] - V - 1) % oov_slots
    return out


def _dropout_mask(rng, shape, keep, dtype):
    sample_dtype = np.float32 if dtype == np.dtype(np.float32) else np.float64
    mask = (rng.random(shape, dtype=sample_dtype) < keep).astype(dtype)
    mask /= dtype.type(keep)
    return mask


def forward_chunk(model: NeuralModel, ids, mask, states, train=False, rng=None):
    """One chunk through the stack.

    ids, mask: (B, t); states: per-layer (h, c) or None.  Returns
    (logits, new_states, cache) where logits has one row per mask=1
    position in (row, time) order.  Inverted dropout is applied to
    non-recurrent connections when train=True.
    """
    cfg = model.config
    p = model.params
    B, t = ids.shape
    if states is None:
        states = zero_states(model, B)
    mapped = map_input_ids(ids, model.V, cfg.oov_slots)
    if int(mapped.max(initial=0)) >= model.v_ext:
        raise ValueError("token id out of embedding range")

    x = p["L"][mapped.T]                        # time-major (t, B, d_x)
    cache = {"ids": mapped, "layers": [], "mask": mask}
    new_states = []
    inp = x
    for layer in range(cfg.layers):
        wx, wh, b = (p[n] for n in model.layer_names(layer))
        drop = None
        if train and cfg.dropout_keep < 1.0:
            drop = _dropout_mask(rng, inp.shape, cfg.dropout_keep, inp.dtype)
            inp = inp * drop
        xproj = inp.reshape(t * B, -1) @ wx
        xproj += b
        xproj = np.ascontiguousarray(xproj.reshape(t, B, 4 * cfg.hidden))
        h0, c0 = states[layer]
        h_all, c_all, gates = kernels.lstm_forward(xproj, wh, h0, c0)
        cache["layers"].append({
            "inp": inp, "drop": drop, "h_all": h_all, "c_all": c_all,
            "gates": gates, "h0": h0, "c0": c0,
        })
        new_states.append((h_all[-1].copy(), c_all[-1].copy()))
        inp = h_all

    rows, cols = np.nonzero(mask)
    top_h = cache["layers"][-1]["h_all"]
    hm = np.ascontiguousarray(top_h[cols, rows, :])     # (K, H)
    out_drop = None
    if train and cfg.dropout_keep < 1.0 and hm.size:
        out_drop = _dropout_mask(rng, hm.shape, cfg.dropout_keep, hm.dtype)
        hm = hm * out_drop
    l_pred = hm @ p["A"]                                # (K, d_x)
    logits = l_pred @ p["L"][1:model.V + 1].T + p["b_out"]
    cache.update(rows=rows, cols=cols, hm=hm, out_drop=out_drop,
                 l_pred=l_pred)
    return logits, new_states, cache


def softmax(logits):
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def backward_chunk(model: NeuralModel, cache, dlogits):
    """Gradients for one chunk, truncated at the chunk boundary."""
    cfg = model.config
    p = model.params
    grads = {name: np.zeros_like(arr) for name, arr in p.items()}
    t, B, _ = cache["layers"][0]["inp"].shape
    rows, cols = cache["rows"], cache["cols"]

    Lv = p["L"][1:model.V + 1]
    dl_pred = dlogits @ Lv                              # (K, d_x)
    grads["L"][1:model.V + 1] += dlogits.T @ cache["l_pred"]
    grads["b_out"] += dlogits.sum(axis=0)
    grads["A"] += cache["hm"].T @ dl_pred
    dhm = dl_pred @ p["A"].T
    if cache["out_drop"] is not None:
        dhm = dhm * cache["out_drop"]

    H = cfg.hidden
    dh_all = np.zeros((t, B, H), dtype=dhm.dtype)
    dh_all[cols, rows, :] = dhm

    dinp = None
    for layer in range(cfg.layers - 1, -1, -1):
        lc = cache["layers"][layer]
        wx, wh, _ = (p[n] for n in model.layer_names(layer))
        if dinp is not None:
            dh_all += dinp
        dxproj, dwh, _, _ = kernels.lstm_backward(
            dh_all, wh, lc["h0"], lc["c0"], lc["h_all"], lc["c_all"],
            lc["gates"])
        names = model.layer_names(layer)
        grads[names[1]] += dwh
        flat = dxproj.reshape(t * B, -1)
        grads[names[0]] += lc["inp"].reshape(t * B, -1).T @ flat
        grads[names[2]] += flat.sum(axis=0)
        dinp = (flat @ wx.T).reshape(t, B, -1)
        if lc["drop"] is not None:
            dinp = dinp * lc["drop"]
        if layer > 0:
            dh_all = np.zeros_like(cache["layers"][layer - 1]["h_all"])

    # Embedding gradient through the input pathway; padding row stays zero.
    ids_tm = cache["ids"].T                             # (t, B)
    np.add.at(grads["L"], ids_tm.reshape(-1), dinp.reshape(t * B, -1))
    grads["L"][0] = 0.0
    return grads


def loss_and_gradients(model: NeuralModel, ids, mask, labels, states,
                       train=True, rng=None):
    """Masked cross-entropy plus L2, with gradients clipped to clip_norm.

    labels: (K,) ids in [1, V] aligned with the chunk's masked positions.
    Empty-mask chunks return loss 0 and zero gradients; state still moves.
    """
    cfg = model.config
    logits, new_states, cache = forward_chunk(model, ids, mask, states,
                                              train=train, rng=rng)
    K = logits.shape[0]
    if K == 0:
        grads = {name: np.zeros_like(arr) for name, arr in model.params.items()}
        return 0.0, grads, new_states
    if len(labels) != K:
        raise ValueError("labels misaligned with mask")
    probs = softmax(logits)
    idx = np.asarray(labels) - 1                        # logit column for id k is k-1
    ce = -np.log(np.maximum(probs[np.arange(K), idx], 1e-30)).mean()
    l2 = 0.0
    if cfg.l2 > 0.0:
        l2 = cfg.l2 * sum(float((model.params[n] ** 2).sum())
                          for n in model.weight_names())
    dlogits = probs
    dlogits[np.arange(K), idx] -= 1.0
    dlogits /= K
    grads = backward_chunk(model, cache, dlogits.astype(model.dtype))
    if cfg.l2 > 0.0:
        for n in model.weight_names():
            grads[n] += (2.0 * cfg.l2) * model.params[n]
    clip_gradients(grads, cfg.clip_norm)
    return float(ce + l2), grads, new_states


def clip_gradients(grads, clip_norm):
    total = 0.0
    for g in grads.values():
        total += float((g.astype(np.float64) ** 2).sum())
    norm = np.sqrt(total)
    if norm > clip_norm > 0:
        scale = clip_norm / norm
        for g in grads.values():
            g *= g.dtype.type(scale)
    return norm


def terminal_logits(model: NeuralModel, context_ids):
    """Forward a full context (stateful across bptt-sized chunks); returns
    the logits at the final position."""
    cfg = model.config
    ids = np.asarray(context_ids, dtype=np.int64)[None, :]
    n = ids.shape[1]
    states = zero_states(model, 1)
    logits = None
    for start in range(0, n, cfg.bptt):
        chunk = ids[:, start:start + cfg.bptt]
        mask = np.zeros_like(chunk, dtype=np.uint8)
        if start + chunk.shape[1] >= n:
            mask[0, n - 1 - start] = 1
        out, states, _ = forward_chunk(model, chunk, mask, states, train=False)
        if out.shape[0]:
            logits = out[0]
    return logits


@dataclass
class RankedSuggestion:
    token: str
    score: float
    rank: int


def predict(model: NeuralModel, context_ids, k, vocab, candidate_filter=None):
    """Top-k labels with renormalized probabilities over the candidate set.

    candidate_filter is a set of label ids; empty intersections fall back
    to the full method set with a flag in the response.
    """
    flags = []
    method_ids = vocab.method_ids
    candidates = list(method_ids)
    if candidate_filter is not None:
        inter = [m for m in method_ids if m in candidate_filter]
        if inter:
            candidates = inter
        else:
            flags.append("empty_candidate_filter")
    logits = terminal_logits(model, context_ids)
    cand = np.asarray(candidates, dtype=np.int64)
    probs = softmax(logits[cand - 1].astype(np.float64))
    order = sorted(range(len(cand)),
                   key=lambda i: (-probs[i], vocab.id_to_token[int(cand[i])]))
    out = []
    for rank, i in enumerate(order[:k], start=1):
        out.append(RankedSuggestion(vocab.id_to_token[int(cand[i])],
                                    float(probs[i]), rank))
    return out, flags
