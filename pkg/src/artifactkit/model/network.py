"""Inference-only forward pass of the reference detector.

Pipeline per clip: every frame runs through the dynamic-filter encoder to a
fixed-size embedding; embeddings are consumed segment by segment by a
transformer that threads memory tokens across segments; the pooled sequence
representation feeds ten independent sigmoid heads.

Everything is a pure function of (input, params): no global state, no
dropout, no gradients.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..errors import ToolkitError
from .params import N_HEADS, ModelParams

_LN_EPS = 1e-5


def gelu(x: np.ndarray) -> np.ndarray:
    # tanh approximation; exact erf form is unavailable in plain numpy
    c = np.sqrt(2.0 / np.pi)
    return 0.5 * x * (1.0 + np.tanh(c * (x + 0.044715 * x**3)))


def sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def layer_norm(x: np.ndarray, gamma: np.ndarray, beta: np.ndarray) -> np.ndarray:
    mean = x.mean(axis=-1, keepdims=True)
    var = x.var(axis=-1, keepdims=True)
    return (x - mean) / np.sqrt(var + _LN_EPS) * gamma + beta


def softmax(x: np.ndarray, axis: int = -1) -> np.ndarray:
    shifted = x - x.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=axis, keepdims=True)


def conv2d(x: np.ndarray, weight: np.ndarray, bias, stride: int = 1) -> np.ndarray:
    """Same-padded 2-D convolution, (C,H,W) x (O,C,k,k) -> (O,H/s,W/s)."""
    k = weight.shape[-1]
    pad = k // 2
    xp = np.pad(x, ((0, 0), (pad, pad), (pad, pad)))
    windows = sliding_window_view(xp, (k, k), axis=(1, 2))[:, ::stride, ::stride]
    out = np.einsum("chwij,ocij->ohw", windows, weight, optimize=True)
    if bias is not None:
        out += bias[:, None, None]
    return out


def _linear(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    return x @ w.T + b


def frame_to_input(frame) -> np.ndarray:
    """Per-frame standardized luma as the single input channel.

    The +1 in the denominator keeps flat frames finite and avoids blowing up
    quantization noise on nearly flat ones.
    """
    luma = frame.luma.astype(np.float64)
    return ((luma - luma.mean()) / (luma.std() + 1.0))[None, :, :]


# ---------------------------------------------------------------------------
# frame encoder

def _level_forward(x: np.ndarray, params: ModelParams, level: int):
    """One pyramid level; returns (downsampled features, one-hot mask)."""
    p = f"enc.l{level}"
    cfg = params.adfe
    m, k = cfg.regions, cfg.guided_kernel
    c_in = x.shape[0]
    c_out = cfg.channels[level]

    guided = conv2d(x, params[f"{p}.guide.w"], params[f"{p}.guide.b"])
    choice = np.argmax(guided, axis=0)  # ties resolve to the lowest region index
    mask = np.zeros_like(guided)
    np.put_along_axis(mask, choice[None], 1.0, axis=0)

    pooled = x.mean(axis=(1, 2))
    hidden = gelu(_linear(pooled, params[f"{p}.gen.fc1.w"], params[f"{p}.gen.fc1.b"]))
    flat = _linear(hidden, params[f"{p}.gen.fc2.w"], params[f"{p}.gen.fc2.b"])
    region_filters = flat.reshape(m, c_out, c_in, k, k)

    regional = np.zeros((c_out,) + x.shape[1:])
    for region in range(m):
        regional += mask[region] * conv2d(x, region_filters[region], None)
    regional = gelu(regional)

    down = gelu(conv2d(regional, params[f"{p}.down.w"], params[f"{p}.down.b"], stride=2))
    return down, mask


def _adfe(frame, params: ModelParams):
    cfg = params.adfe
    x = frame_to_input(frame)
    if (x.shape[2], x.shape[1]) != cfg.input_size:
        raise ToolkitError(
            f"frame {x.shape[2]}x{x.shape[1]} does not match encoder input {cfg.input_size}"
        )
    masks = []
    for level in range(cfg.levels):
        x, mask = _level_forward(x, params, level)
        masks.append(mask)
    h = _linear(x.reshape(-1), params["enc.proj.w"], params["enc.proj.b"])
    return h, masks


def adfe_forward(frame, params: ModelParams) -> np.ndarray:
    """Embed one frame; result has exactly embed_dim entries."""
    return _adfe(frame, params)[0]


def adfe_masks(frame, params: ModelParams) -> list[np.ndarray]:
    """The per-level one-hot region masks, for inspection and invariants."""
    return _adfe(frame, params)[1]


# ---------------------------------------------------------------------------
# recurrent-memory transformer

def _attention(tokens: np.ndarray, params: ModelParams, prefix: str) -> np.ndarray:
    cfg = params.rmvit
    t, d = tokens.shape
    dh = d // cfg.vit_heads
    qkv = _linear(tokens, params[f"{prefix}.qkv.w"], params[f"{prefix}.qkv.b"])
    q, k, v = np.split(qkv, 3, axis=-1)

    def heads(a):
        return a.reshape(t, cfg.vit_heads, dh).transpose(1, 0, 2)

    q, k, v = heads(q), heads(k), heads(v)
    scores = softmax(q @ k.transpose(0, 2, 1) / np.sqrt(dh), axis=-1)
    mixed = (scores @ v).transpose(1, 0, 2).reshape(t, d)
    return _linear(mixed, params[f"{prefix}.out.w"], params[f"{prefix}.out.b"])


def _vit_block(tokens: np.ndarray, params: ModelParams, block: int) -> np.ndarray:
    p = f"seq.b{block}"
    tokens = tokens + _attention(layer_norm(tokens, params[f"{p}.ln1.g"], params[f"{p}.ln1.b"]), params, f"{p}.attn")
    normed = layer_norm(tokens, params[f"{p}.ln2.g"], params[f"{p}.ln2.b"])
    mlp = _linear(gelu(_linear(normed, params[f"{p}.mlp.fc1.w"], params[f"{p}.mlp.fc1.b"])),
                  params[f"{p}.mlp.fc2.w"], params[f"{p}.mlp.fc2.b"])
    return tokens + mlp


def vit_encode(tokens: np.ndarray, params: ModelParams) -> np.ndarray:
    """One full transformer pass over a token sequence, final norm included."""
    for block in range(params.rmvit.vit_depth):
        tokens = _vit_block(tokens, params, block)
    return layer_norm(tokens, params["seq.ln_f.g"], params["seq.ln_f.b"])


def rmvit_forward(embeddings, params: ModelParams) -> np.ndarray:
    """Segment-recurrent encoding of frame embeddings to one representation.

    Segments of segment_len frame tokens are prefixed with the running
    memory tokens (zeros initially), encoded together, and the renewed
    memory carries into the next segment. The final memory plus every
    processed frame token are averaged and mapped to out_dim.
    """
    cfg = params.rmvit
    embeddings = np.asarray(embeddings, dtype=np.float64)
    if embeddings.ndim != 2 or embeddings.shape[0] < 1:
        raise ToolkitError("rmvit_forward needs a (frames, embed_dim) array with >= 1 frame")
    tokens = _linear(embeddings, params["seq.in_proj.w"], params["seq.in_proj.b"])

    memory = np.zeros((cfg.mem_tokens, cfg.vit_dim))
    frame_tokens = []
    for start in range(0, tokens.shape[0], cfg.segment_len):
        segment = tokens[start : start + cfg.segment_len]
        joined = np.concatenate([memory, segment], axis=0)
        if cfg.use_pos_embed:
            joined = joined + params["seq.pos"][: cfg.mem_tokens + len(segment)]
        encoded = vit_encode(joined, params)
        memory = encoded[: cfg.mem_tokens]
        frame_tokens.append(encoded[cfg.mem_tokens :])

    pooled = np.concatenate([memory, *frame_tokens], axis=0).mean(axis=0)
    hidden = gelu(_linear(pooled, params["seq.out.fc1.w"], params["seq.out.fc1.b"]))
    return _linear(hidden, params["seq.out.fc2.w"], params["seq.out.fc2.b"])


# ---------------------------------------------------------------------------
# prediction heads

@dataclass(frozen=True)
class HeadOutput:
    probability: float
    label: int


def predict_heads(v: np.ndarray, params: ModelParams) -> list[HeadOutput]:
    """Ten independent existence probabilities; label 1 strictly above 0.5."""
    v = np.asarray(v, dtype=np.float64)
    if v.shape != (params.rmvit.out_dim,):
        raise ToolkitError(f"representation shape {v.shape} != ({params.rmvit.out_dim},)")
    outputs = []
    for j in range(N_HEADS):
        hidden = gelu(_linear(v, params[f"head{j}.fc1.w"], params[f"head{j}.fc1.b"]))
        p = float(sigmoid(_linear(hidden, params[f"head{j}.fc2.w"], params[f"head{j}.fc2.b"]))[0])
        outputs.append(HeadOutput(probability=p, label=int(p > 0.5)))
    return outputs


def mvad_forward(clip, params: ModelParams) -> list[HeadOutput]:
    """Full clip-to-decisions composition."""
    embeddings = np.stack([adfe_forward(frame, params) for frame in clip.frames])
    v = rmvit_forward(embeddings, params)
    return predict_heads(v, params)


def clip_scores(clip, params: ModelParams) -> np.ndarray:
    return np.array([h.probability for h in mvad_forward(clip, params)])
