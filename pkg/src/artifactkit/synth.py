"""The ten streaming-video artifact synthesizers and their intensity levels.

Each synthesizer is a pure function of (clip, spec); stochastic ones draw
everything from a counter-based generator keyed by spec.seed, so identical
inputs give bitwise-identical outputs regardless of scheduling.

Artifact math operates on luma; chroma planes are carried through untouched
except where an operation manipulates whole frames (temporal ops) or states
otherwise (black frames, concealment).
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum, IntEnum
from fractions import Fraction

import numpy as np

from .errors import SynthParameterError
from .seeding import make_rng
from .video import Clip, Frame


class ArtifactKind(IntEnum):
    """Canonical label order: five source artifacts, then five non-source."""

    MOTION_BLUR = 0
    DARK_SCENE = 1
    GRAININESS = 2
    ALIASING = 3
    BANDING = 4
    BLOCKINESS = 5
    SPATIAL_BLUR = 6
    TRANSMISSION_ERROR = 7
    FRAME_DROP = 8
    BLACK_SCREEN = 9

    @property
    def cli_name(self) -> str:
        return self.name.lower()


SOURCE_KINDS = tuple(ArtifactKind)[:5]
NONSOURCE_KINDS = tuple(ArtifactKind)[5:]

# Kinds whose output depends on a random draw and therefore require a seed.
STOCHASTIC_KINDS = frozenset(
    {
        ArtifactKind.GRAININESS,
        ArtifactKind.TRANSMISSION_ERROR,
        ArtifactKind.FRAME_DROP,
        ArtifactKind.BLACK_SCREEN,
    }
)


class IntensityLevel(Enum):
    VERY_NOTICEABLE = "very_noticeable"
    NOTICEABLE = "noticeable"
    SUBTLE = "subtle"
    VERY_SUBTLE = "very_subtle"


def kind_from_name(name: str) -> ArtifactKind:
    try:
        return ArtifactKind[name.upper()]
    except KeyError:
        raise SynthParameterError(f"unknown artifact {name!r}") from None


def level_from_name(name: str) -> IntensityLevel:
    try:
        return IntensityLevel(name.lower())
    except ValueError:
        raise SynthParameterError(f"unknown intensity level {name!r}") from None


# Calibrated level parameter per (artifact, level). Meanings:
#   motion_blur        frames averaged per output frame
#   dark_scene         luma divisor
#   graininess         noise standard deviation
#   aliasing           resampling ratio
#   banding            log2 of the quantization step
#   blockiness         quantizer parameter of the block codec
#   spatial_blur       Gaussian kernel size
#   transmission_error nominal lost bitrate in Mbit/s (drives the slice schedule)
#   frame_drop         frozen run length in frames
#   black_screen       black run length in frames
_VN, _N, _S, _VS = IntensityLevel
LEVEL_PARAMS: dict[tuple[ArtifactKind, IntensityLevel], float] = {
    (ArtifactKind.MOTION_BLUR, _VN): 16,
    (ArtifactKind.MOTION_BLUR, _N): 12,
    (ArtifactKind.MOTION_BLUR, _S): 8,
    (ArtifactKind.MOTION_BLUR, _VS): 4,
    (ArtifactKind.DARK_SCENE, _VN): 4,
    (ArtifactKind.DARK_SCENE, _N): 3,
    (ArtifactKind.DARK_SCENE, _S): 2,
    (ArtifactKind.DARK_SCENE, _VS): 1.5,
    (ArtifactKind.GRAININESS, _VN): 50,
    (ArtifactKind.GRAININESS, _N): 25,
    (ArtifactKind.GRAININESS, _S): 10,
    (ArtifactKind.GRAININESS, _VS): 5,
    (ArtifactKind.ALIASING, _VN): 4,
    (ArtifactKind.ALIASING, _N): 3,
    (ArtifactKind.ALIASING, _S): 2,
    (ArtifactKind.ALIASING, _VS): 1.5,
    (ArtifactKind.BANDING, _VN): 5,
    (ArtifactKind.BANDING, _N): 4,
    (ArtifactKind.BANDING, _S): 3,
    (ArtifactKind.BANDING, _VS): 2,
    (ArtifactKind.BLOCKINESS, _VN): 47,
    (ArtifactKind.BLOCKINESS, _N): 42,
    (ArtifactKind.BLOCKINESS, _S): 37,
    (ArtifactKind.BLOCKINESS, _VS): 32,
    (ArtifactKind.SPATIAL_BLUR, _VN): 9,
    (ArtifactKind.SPATIAL_BLUR, _N): 7,
    (ArtifactKind.SPATIAL_BLUR, _S): 5,
    (ArtifactKind.SPATIAL_BLUR, _VS): 3,
    (ArtifactKind.TRANSMISSION_ERROR, _VN): 4.0,
    (ArtifactKind.TRANSMISSION_ERROR, _N): 2.0,
    (ArtifactKind.TRANSMISSION_ERROR, _S): 1.0,
    (ArtifactKind.TRANSMISSION_ERROR, _VS): 0.5,
    (ArtifactKind.FRAME_DROP, _VN): 16,
    (ArtifactKind.FRAME_DROP, _N): 12,
    (ArtifactKind.FRAME_DROP, _S): 8,
    (ArtifactKind.FRAME_DROP, _VS): 4,
    (ArtifactKind.BLACK_SCREEN, _VN): 16,
    (ArtifactKind.BLACK_SCREEN, _N): 12,
    (ArtifactKind.BLACK_SCREEN, _S): 8,
    (ArtifactKind.BLACK_SCREEN, _VS): 4,
}

# Lost slices per affected frame and fraction of frames affected, per level.
_TRANSMISSION_SCHEDULE = {
    _VN: (4, 1.0),
    _N: (2, 1.0),
    _S: (1, 0.25),
    _VS: (1, 0.10),
}

SLICE_ROWS = 16  # luma rows per transport slice

# The quantizer value that flags blockiness in the dataset pipeline.
BLOCKINESS_QP = 47


def level_param(kind: ArtifactKind, level: IntensityLevel) -> float:
    return LEVEL_PARAMS[(kind, level)]


@dataclass(frozen=True)
class ArtifactSpec:
    """One cell of the artifact/level table plus a synthesis seed.

    param must equal the calibrated table value for (kind, level); seed is
    required exactly for the stochastic kinds.
    """

    kind: ArtifactKind
    level: IntensityLevel
    param: float
    seed: int | None = None

    def __post_init__(self):
        expected = LEVEL_PARAMS[(self.kind, self.level)]
        if float(self.param) != float(expected):
            raise SynthParameterError(
                f"{self.kind.cli_name} {self.level.value}: param {self.param} != table value {expected}"
            )
        if self.kind in STOCHASTIC_KINDS and self.seed is None:
            raise SynthParameterError(f"{self.kind.cli_name} requires a seed")

    @classmethod
    def for_level(cls, kind: ArtifactKind, level: IntensityLevel, seed: int | None = None) -> "ArtifactSpec":
        return cls(kind, level, LEVEL_PARAMS[(kind, level)], seed)


def _expect(spec: ArtifactSpec, kind: ArtifactKind) -> None:
    if spec.kind is not kind:
        raise SynthParameterError(f"spec is {spec.kind.cli_name}, expected {kind.cli_name}")


def _map_luma(clip: Clip, fn) -> Clip:
    return Clip(tuple(f.with_planes(luma=fn(f.luma)) for f in clip.frames), clip.fps)


# ---------------------------------------------------------------------------
# source artifacts


def _nn_resample(plane: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    h, w = plane.shape
    rows = (np.arange(out_h) * h) // out_h
    cols = (np.arange(out_w) * w) // out_w
    return plane[rows][:, cols]


def synth_aliasing(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Nearest-neighbour downsample by the ratio, then back up to size."""
    _expect(spec, ArtifactKind.ALIASING)
    ratio = float(spec.param)
    h, w = clip.height, clip.width
    down_h, down_w = int(h / ratio), int(w / ratio)
    if down_h < 1 or down_w < 1:
        raise SynthParameterError(f"ratio {ratio} collapses {w}x{h} below one sample")
    return _map_luma(clip, lambda y: _nn_resample(_nn_resample(y, down_h, down_w), h, w))


def synth_banding(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Quantize luma to steps of 2**ratio, flattening smooth gradients."""
    _expect(spec, ArtifactKind.BANDING)
    step = 1 << int(spec.param)
    return _map_luma(clip, lambda y: (y // step) * step)


def synth_dark_scene(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Divide stored luma by the decrease ratio."""
    _expect(spec, ArtifactKind.DARK_SCENE)
    ratio = float(spec.param)
    return _map_luma(clip, lambda y: np.rint(y / ratio).astype(np.uint8))


def synth_graininess(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Add i.i.d. zero-mean Gaussian noise of the given std to luma."""
    _expect(spec, ArtifactKind.GRAININESS)
    std = float(spec.param)
    rng = make_rng(spec.seed)
    frames = []
    for f in clip.frames:
        noise = rng.normal(0.0, std, f.luma.shape)
        y = np.clip(np.rint(f.luma + noise), 0, 255).astype(np.uint8)
        frames.append(f.with_planes(luma=y))
    return Clip(tuple(frames), clip.fps)


def synth_motion_blur(clip: Clip, spec: ArtifactSpec, stride: int = 8) -> Clip:
    """Average windows of high-frame-rate frames, then subsample by stride.

    Output frame t is the per-pixel mean of `param` consecutive input frames
    centred at input index t*stride (window shifted to stay in range at the
    clip edges). All three planes are averaged; output length is
    clip.length // stride. stride=1 degenerates to a pure temporal box blur
    for clips that are already at target length.
    """
    _expect(spec, ArtifactKind.MOTION_BLUR)
    window = int(spec.param)
    n = clip.length
    if stride < 1 or n % stride:
        raise SynthParameterError(f"clip length {n} not divisible by stride {stride}")
    if stride > 1 and window > 2 * stride:
        raise SynthParameterError(f"window {window} exceeds 2x stride {stride}")
    if window > n:
        raise SynthParameterError(f"window {window} exceeds clip length {n}")
    ys = np.stack([f.luma for f in clip.frames])
    us = np.stack([f.chroma_u for f in clip.frames])
    vs = np.stack([f.chroma_v for f in clip.frames])
    frames = []
    for t in range(n // stride):
        start = min(max(t * stride - window // 2, 0), n - window)
        sl = slice(start, start + window)
        frames.append(
            Frame(
                np.rint(ys[sl].mean(axis=0)).astype(np.uint8),
                np.rint(us[sl].mean(axis=0)).astype(np.uint8),
                np.rint(vs[sl].mean(axis=0)).astype(np.uint8),
            )
        )
    return Clip(tuple(frames), clip.fps / stride)


def subsample_frames(clip: Clip, stride: int) -> Clip:
    """Keep every stride-th frame; the blur-free temporal reduction."""
    if stride < 1 or clip.length % stride:
        raise SynthParameterError(f"clip length {clip.length} not divisible by stride {stride}")
    return Clip(clip.frames[::stride], clip.fps / stride)


# ---------------------------------------------------------------------------
# non-source artifacts

_DCT8 = np.zeros((8, 8))
for _k in range(8):
    for _n in range(8):
        _DCT8[_k, _n] = np.sqrt((1 if _k == 0 else 2) / 8) * np.cos((2 * _n + 1) * _k * np.pi / 16)


def _block_codec(luma: np.ndarray, qp: float) -> np.ndarray:
    """8x8 transform coding of a luma plane.

    AC coefficients are quantized with step 2**((qp-4)/6); the DC
    coefficient passes through so flat regions survive exactly. Planes not
    divisible by 8 are edge-padded and cropped back.
    """
    qstep = 2.0 ** ((qp - 4.0) / 6.0)
    h, w = luma.shape
    ph, pw = -h % 8, -w % 8
    x = np.pad(luma.astype(np.float64), ((0, ph), (0, pw)), mode="edge")
    blocks = x.reshape((h + ph) // 8, 8, (w + pw) // 8, 8).transpose(0, 2, 1, 3)
    coef = _DCT8 @ blocks @ _DCT8.T
    dc = coef[..., 0, 0].copy()
    coef = np.round(coef / qstep) * qstep
    coef[..., 0, 0] = dc
    rec = _DCT8.T @ coef @ _DCT8
    out = rec.transpose(0, 2, 1, 3).reshape(h + ph, w + pw)[:h, :w]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def synth_blockiness(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Compress luma with the internal 8x8 block codec at the given QP."""
    _expect(spec, ArtifactKind.BLOCKINESS)
    qp = float(spec.param)
    return _map_luma(clip, lambda y: _block_codec(y, qp))


def gaussian_kernel(size: int) -> np.ndarray:
    """Normalized 1-D Gaussian of the given odd size; sigma = size / 6."""
    if size < 1 or size % 2 == 0:
        raise SynthParameterError(f"kernel size {size} must be odd")
    sigma = size / 6.0
    x = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-0.5 * (x / sigma) ** 2)
    return g / g.sum()


def _convolve_axis(arr: np.ndarray, kernel: np.ndarray, axis: int) -> np.ndarray:
    r = len(kernel) // 2
    pads = [(0, 0), (0, 0)]
    pads[axis] = (r, r)
    padded = np.pad(arr, pads, mode="edge")
    out = np.zeros(arr.shape, dtype=np.float64)
    for i, kv in enumerate(kernel):
        sl = [slice(None), slice(None)]
        sl[axis] = slice(i, i + arr.shape[axis])
        out += kv * padded[tuple(sl)]
    return out


def synth_spatial_blur(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Convolve luma with a normalized k x k Gaussian, clamp-to-edge borders."""
    _expect(spec, ArtifactKind.SPATIAL_BLUR)
    kernel = gaussian_kernel(int(spec.param))

    def blur(y: np.ndarray) -> np.ndarray:
        f = _convolve_axis(y.astype(np.float64), kernel, axis=1)
        f = _convolve_axis(f, kernel, axis=0)
        return np.clip(np.rint(f), 0, 255).astype(np.uint8)

    return _map_luma(clip, blur)


def _run_window(rng: np.random.Generator, n: int, run: int) -> int:
    return int(rng.integers(0, n - run + 1))


def synth_frame_drop(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Freeze a seeded random run of frames on the last good frame."""
    _expect(spec, ArtifactKind.FRAME_DROP)
    run = int(spec.param)
    if run >= clip.length:
        raise SynthParameterError(f"run length {run} must be shorter than clip ({clip.length})")
    rng = make_rng(spec.seed)
    t = _run_window(rng, clip.length, run)
    held = clip.frames[t - 1] if t > 0 else clip.frames[t + run]
    frames = list(clip.frames)
    frames[t : t + run] = [held] * run
    return Clip(tuple(frames), clip.fps)


def synth_black_screen(clip: Clip, spec: ArtifactSpec) -> Clip:
    """Replace a seeded random run of frames with studio black."""
    _expect(spec, ArtifactKind.BLACK_SCREEN)
    run = int(spec.param)
    if run >= clip.length:
        raise SynthParameterError(f"run length {run} must be shorter than clip ({clip.length})")
    rng = make_rng(spec.seed)
    t = _run_window(rng, clip.length, run)
    black = Frame.filled(clip.width, clip.height, luma=16, chroma=128)
    frames = list(clip.frames)
    frames[t : t + run] = [black] * run
    return Clip(tuple(frames), clip.fps)


def transmission_error_with_log(clip: Clip, spec: ArtifactSpec) -> tuple[Clip, list[tuple[int, int]]]:
    """Lose seeded 16-row slices and conceal them from the previous frame.

    Concealment copies the co-located luma and chroma rows of the previous
    *source* frame (frame 0 conceals with mid-gray), mimicking a decoder
    that still holds an intact reference. Returns the damaged clip and the
    list of (frame_index, slice_index) losses.
    """
    _expect(spec, ArtifactKind.TRANSMISSION_ERROR)
    per_frame, frame_frac = _TRANSMISSION_SCHEDULE[spec.level]
    n_slices = clip.height // SLICE_ROWS
    if n_slices < 1:
        raise SynthParameterError(f"clip height {clip.height} shorter than one slice")
    rng = make_rng(spec.seed)
    losses: list[tuple[int, int]] = []
    frames = []
    for t, frame in enumerate(clip.frames):
        if frame_frac < 1.0 and rng.random() >= frame_frac:
            frames.append(frame)
            continue
        count = min(per_frame, n_slices)
        lost = np.sort(rng.choice(n_slices, size=count, replace=False))
        y = frame.luma.copy()
        u = frame.chroma_u.copy()
        v = frame.chroma_v.copy()
        prev = clip.frames[t - 1] if t > 0 else None
        for s in lost:
            ys = slice(s * SLICE_ROWS, (s + 1) * SLICE_ROWS)
            cs = slice(s * SLICE_ROWS // 2, (s + 1) * SLICE_ROWS // 2)
            if prev is None:
                y[ys] = 128
                u[cs] = 128
                v[cs] = 128
            else:
                y[ys] = prev.luma[ys]
                u[cs] = prev.chroma_u[cs]
                v[cs] = prev.chroma_v[cs]
            losses.append((t, int(s)))
        frames.append(Frame(y, u, v))
    return Clip(tuple(frames), clip.fps), losses


def synth_transmission_error(clip: Clip, spec: ArtifactSpec) -> Clip:
    return transmission_error_with_log(clip, spec)[0]


_DISPATCH = {
    ArtifactKind.MOTION_BLUR: synth_motion_blur,
    ArtifactKind.DARK_SCENE: synth_dark_scene,
    ArtifactKind.GRAININESS: synth_graininess,
    ArtifactKind.ALIASING: synth_aliasing,
    ArtifactKind.BANDING: synth_banding,
    ArtifactKind.BLOCKINESS: synth_blockiness,
    ArtifactKind.SPATIAL_BLUR: synth_spatial_blur,
    ArtifactKind.TRANSMISSION_ERROR: synth_transmission_error,
    ArtifactKind.FRAME_DROP: synth_frame_drop,
    ArtifactKind.BLACK_SCREEN: synth_black_screen,
}


def apply_artifact(clip: Clip, spec: ArtifactSpec, stride: int = 1) -> Clip:
    """Apply one artifact; stride only matters for motion blur."""
    if spec.kind is ArtifactKind.MOTION_BLUR:
        return synth_motion_blur(clip, spec, stride=stride)
    return _DISPATCH[spec.kind](clip, spec)
