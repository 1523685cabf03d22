"""Post-training 8-bit affine quantization of weight tensors.

Scale is (max - min)/255 so both range endpoints are representable in a
byte; codes round half away from zero.  Constant tensors use the beta=0
convention with all-zero codes.  Biases stay f32.
"""

from dataclasses import dataclass

import numpy as np

from .container import load_container, save_container
from .neural import NeuralModel, TrainConfig


class QuantizationError(ValueError):
    pass


@dataclass
class QuantizedTensor:
    codes: np.ndarray       # u8, original shape
    min_val: float
    beta: float
    name: str = ""


def quantize_tensor(W, name="") -> QuantizedTensor:
    W = np.asarray(W)
    if not np.all(np.isfinite(W)):
        raise QuantizationError(f"non-finite values in tensor {name!r}")
    lo = float(W.min())
    hi = float(W.max())
    if hi == lo:
        return QuantizedTensor(np.zeros(W.shape, np.uint8), lo, 0.0, name)
    beta = (hi - lo) / 255.0
    codes = np.floor((W.astype(np.float64) - lo) / beta + 0.5)
    codes = np.clip(codes, 0, 255).astype(np.uint8)
    return QuantizedTensor(codes, lo, beta, name)


def dequantize_tensor(qt: QuantizedTensor, dtype=np.float32):
    return (qt.min_val + qt.beta * qt.codes.astype(np.float64)).astype(dtype)


def save_model(model: NeuralModel, path, quantized=False):
    """Write a model container; with quantized=True the embedding, LSTM
    weight matrices, and projection go to u8, biases stay f32."""
    meta = {
        "model_id": model.model_id,
        "config": model.config.to_json_dict(),
        "V": model.V,
        "vocab_hash": model.vocab_hash,
        "quantized": bool(quantized),
    }
    quant_names = set(model.weight_names()) | {"L"} if quantized else set()
    tensors = {}
    for name, arr in model.params.items():
        if name in quant_names:
            qt = quantize_tensor(arr, name)
            tensors[name] = {"codes": qt.codes, "min_val": qt.min_val,
                             "beta": qt.beta}
        else:
            tensors[name] = arr
    save_container(path, meta, tensors)


def load_model(path) -> NeuralModel:
    """Load a container into an inference-ready f32 model (dequantizing
    any u8 tensors)."""
    meta, tensors = load_container(path)
    config = TrainConfig.from_json_dict(meta["config"])
    params = {}
    for name, value in tensors.items():
        if isinstance(value, dict):
            qt = QuantizedTensor(value["codes"], value["min_val"],
                                 value["beta"], name)
            params[name] = dequantize_tensor(qt)
        else:
            params[name] = value.astype(np.float32)
    return NeuralModel(config=config, V=meta["V"], params=params,
                       vocab_hash=meta.get("vocab_hash", ""),
                       model_id=meta.get("model_id", "neural"))


def quantize_model_file(src_path, dst_path):
    """Containerized float model -> quantized container; returns sizes."""
    model = load_model(src_path)
    save_model(model, dst_path, quantized=True)
    return size_report(model)


def size_report(model: NeuralModel):
    """Weight-blob byte sizes (quantized includes per-tensor min/beta)."""
    names = set(model.weight_names()) | {"L"}
    float_bytes = sum(model.params[n].size * 4 for n in names)
    quant_bytes = sum(model.params[n].size for n in names) + 8 * len(names)
    return {"float_weight_bytes": int(float_bytes),
            "quantized_weight_bytes": int(quant_bytes),
            "ratio": quant_bytes / float_bytes}
