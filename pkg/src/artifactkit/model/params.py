"""Model configuration, named parameter layout, seeded init, and file format.

The params file is a versioned header (magic, version, JSON-encoded configs)
followed by every tensor as little-endian float32 in layout order. The
layout is a pure function of the configs, so a file can be validated
byte-for-byte before use.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass
from math import prod, sqrt
from pathlib import Path

import numpy as np

from ..errors import ParamsLayoutError
from ..seeding import make_rng
from ..synth import ArtifactKind

MAGIC = b"AKPM"
VERSION = 1

N_HEADS = len(ArtifactKind)


@dataclass(frozen=True)
class AdfeConfig:
    """Shape of the frame encoder pyramid.

    Each level halves the spatial size; channels lists the output width of
    every level. The flattened final grid is projected to embed_dim.
    """

    input_size: tuple[int, int] = (64, 64)
    levels: int = 2
    guided_kernel: int = 3
    regions: int = 4
    channels: tuple[int, ...] = (8, 16)
    gen_hidden: int = 16
    embed_dim: int = 64

    def __post_init__(self):
        if self.levels < 1:
            raise ParamsLayoutError("levels must be >= 1")
        if self.guided_kernel < 1 or self.guided_kernel % 2 == 0:
            raise ParamsLayoutError(f"guided kernel {self.guided_kernel} must be odd")
        if self.regions < 1 or self.gen_hidden < 1 or self.embed_dim < 1:
            raise ParamsLayoutError("regions, gen_hidden and embed_dim must be >= 1")
        if len(self.channels) != self.levels:
            raise ParamsLayoutError(f"need {self.levels} channel widths, got {len(self.channels)}")
        w, h = self.input_size
        if w % (1 << self.levels) or h % (1 << self.levels):
            raise ParamsLayoutError(f"input {w}x{h} not divisible by 2^{self.levels}")
        object.__setattr__(self, "input_size", tuple(int(v) for v in self.input_size))
        object.__setattr__(self, "channels", tuple(int(v) for v in self.channels))

    @property
    def final_grid(self) -> tuple[int, int]:
        w, h = self.input_size
        return w >> self.levels, h >> self.levels

    @property
    def flat_dim(self) -> int:
        gw, gh = self.final_grid
        return gw * gh * self.channels[-1]


@dataclass(frozen=True)
class RmvitConfig:
    """Shape of the segment-recurrent transformer and prediction heads."""

    segment_len: int = 8
    mem_tokens: int = 4
    vit_depth: int = 2
    vit_heads: int = 4
    vit_dim: int = 64
    out_dim: int = 32
    head_hidden: int = 16
    use_pos_embed: bool = True

    def __post_init__(self):
        if min(self.segment_len, self.mem_tokens, self.vit_depth, self.vit_heads,
               self.vit_dim, self.out_dim, self.head_hidden) < 1:
            raise ParamsLayoutError("all transformer sizes must be >= 1")
        if self.vit_dim % self.vit_heads:
            raise ParamsLayoutError(f"vit_dim {self.vit_dim} not divisible by {self.vit_heads} heads")


def _strict(cls, data: dict):
    known = set(cls.__dataclass_fields__)
    unknown = set(data) - known
    if unknown:
        raise ParamsLayoutError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    coerced = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    return cls(**coerced)


def adfe_from_mapping(data: dict) -> AdfeConfig:
    return _strict(AdfeConfig, data)


def rmvit_from_mapping(data: dict) -> RmvitConfig:
    return _strict(RmvitConfig, data)


def param_layout(adfe: AdfeConfig, rmvit: RmvitConfig) -> list[tuple[str, tuple[int, ...]]]:
    """Every tensor name and shape, in serialization order."""
    k, m = adfe.guided_kernel, adfe.regions
    layout: list[tuple[str, tuple[int, ...]]] = []
    c_in = 1
    for i, c_out in enumerate(adfe.channels):
        p = f"enc.l{i}"
        layout += [
            (f"{p}.guide.w", (m, c_in, k, k)),
            (f"{p}.guide.b", (m,)),
            (f"{p}.gen.fc1.w", (adfe.gen_hidden, c_in)),
            (f"{p}.gen.fc1.b", (adfe.gen_hidden,)),
            (f"{p}.gen.fc2.w", (m * c_out * c_in * k * k, adfe.gen_hidden)),
            (f"{p}.gen.fc2.b", (m * c_out * c_in * k * k,)),
            (f"{p}.down.w", (c_out, c_out, k, k)),
            (f"{p}.down.b", (c_out,)),
        ]
        c_in = c_out
    layout += [("enc.proj.w", (adfe.embed_dim, adfe.flat_dim)), ("enc.proj.b", (adfe.embed_dim,))]

    d = rmvit.vit_dim
    layout += [("seq.in_proj.w", (d, adfe.embed_dim)), ("seq.in_proj.b", (d,))]
    if rmvit.use_pos_embed:
        layout.append(("seq.pos", (rmvit.mem_tokens + rmvit.segment_len, d)))
    for b in range(rmvit.vit_depth):
        p = f"seq.b{b}"
        layout += [
            (f"{p}.ln1.g", (d,)), (f"{p}.ln1.b", (d,)),
            (f"{p}.attn.qkv.w", (3 * d, d)), (f"{p}.attn.qkv.b", (3 * d,)),
            (f"{p}.attn.out.w", (d, d)), (f"{p}.attn.out.b", (d,)),
            (f"{p}.ln2.g", (d,)), (f"{p}.ln2.b", (d,)),
            (f"{p}.mlp.fc1.w", (4 * d, d)), (f"{p}.mlp.fc1.b", (4 * d,)),
            (f"{p}.mlp.fc2.w", (d, 4 * d)), (f"{p}.mlp.fc2.b", (d,)),
        ]
    layout += [("seq.ln_f.g", (d,)), ("seq.ln_f.b", (d,))]
    layout += [
        ("seq.out.fc1.w", (d, d)), ("seq.out.fc1.b", (d,)),
        ("seq.out.fc2.w", (rmvit.out_dim, d)), ("seq.out.fc2.b", (rmvit.out_dim,)),
    ]
    for j in range(N_HEADS):
        layout += [
            (f"head{j}.fc1.w", (rmvit.head_hidden, rmvit.out_dim)),
            (f"head{j}.fc1.b", (rmvit.head_hidden,)),
            (f"head{j}.fc2.w", (1, rmvit.head_hidden)),
            (f"head{j}.fc2.b", (1,)),
        ]
    return layout


@dataclass(frozen=True)
class ModelParams:
    adfe: AdfeConfig
    rmvit: RmvitConfig
    init_seed: int
    tensors: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.tensors[name]


def _fan_in(name: str, shape: tuple[int, ...]) -> int:
    if len(shape) == 4:
        return shape[1] * shape[2] * shape[3]
    if len(shape) == 2 and name != "seq.pos":
        return shape[1]
    return shape[-1]


def init_params(seed: int, adfe: AdfeConfig, rmvit: RmvitConfig) -> ModelParams:
    """Uniform fan-in init for weights and biases; norm gains one, norm shifts zero.

    Biases draw from the same +-1/sqrt(fan_in) range as the weight they follow,
    so layers stay responsive to zero-mean inputs.  Float32 end to end.
    """
    rng = make_rng(seed)
    tensors: dict[str, np.ndarray] = {}
    bound = 1.0
    for name, shape in param_layout(adfe, rmvit):
        if name.endswith(".g"):
            tensors[name] = np.ones(shape, dtype=np.float32)
        elif name.endswith(".b") and ".ln" in name:
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            if not name.endswith(".b"):
                # layout places each bias right after its weight
                bound = 1.0 / sqrt(_fan_in(name, shape))
            tensors[name] = rng.uniform(-bound, bound, size=shape).astype(np.float32)
    return ModelParams(adfe, rmvit, int(seed), tensors)


def params_nbytes(adfe: AdfeConfig, rmvit: RmvitConfig) -> int:
    return 4 * sum(prod(shape) for _, shape in param_layout(adfe, rmvit))


def save_params(params: ModelParams, path: Path) -> None:
    header = json.dumps(
        {"adfe": asdict(params.adfe), "rmvit": asdict(params.rmvit), "init_seed": params.init_seed}
    ).encode()
    layout = param_layout(params.adfe, params.rmvit)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", VERSION, len(header)))
        fh.write(header)
        for name, shape in layout:
            tensor = params.tensors[name]
            if tensor.shape != shape:
                raise ParamsLayoutError(f"{name}: tensor shape {tensor.shape} != layout {shape}")
            fh.write(np.ascontiguousarray(tensor, dtype="<f4").tobytes())


def load_params(path: Path) -> ModelParams:
    blob = Path(path).read_bytes()
    if blob[:4] != MAGIC:
        raise ParamsLayoutError(f"{path}: not a params file (bad magic)")
    version, header_len = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise ParamsLayoutError(f"{path}: unsupported version {version}")
    try:
        header = json.loads(blob[12 : 12 + header_len].decode())
        adfe = adfe_from_mapping(header["adfe"])
        rmvit = rmvit_from_mapping(header["rmvit"])
        init_seed = int(header["init_seed"])
    except (KeyError, ValueError, UnicodeDecodeError) as exc:
        raise ParamsLayoutError(f"{path}: bad header ({exc})") from exc
    layout = param_layout(adfe, rmvit)
    data = blob[12 + header_len :]
    expected = 4 * sum(prod(shape) for _, shape in layout)
    if len(data) != expected:
        raise ParamsLayoutError(f"{path}: payload {len(data)} bytes, layout requires {expected}")
    tensors = {}
    offset = 0
    for name, shape in layout:
        n = prod(shape)
        tensors[name] = np.frombuffer(data, dtype="<f4", count=n, offset=offset).reshape(shape).copy()
        offset += 4 * n
    return ModelParams(adfe, rmvit, init_seed, tensors)
