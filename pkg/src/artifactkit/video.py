"""Planar 8-bit 4:2:0 video model, Y4M file I/O, and patch cropping.

Y4M is the only interchange format: self-describing, codec-free and
bit-exact. Only C420 sampling (and its chroma-siting aliases) is accepted.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    TruncatedStreamError,
    UnsupportedSamplingError,
    VideoFormatError,
    WindowBoundsError,
)

_C420_ALIASES = {"420", "420jpeg", "420mpeg2", "420paldv"}


def _own_plane(data, shape: tuple[int, int], name: str) -> np.ndarray:
    arr = np.array(data, dtype=np.uint8, copy=True)
    if arr.shape != shape:
        raise ValueError(f"{name} plane has shape {arr.shape}, expected {shape}")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Frame:
    """One 4:2:0 frame: full-size luma plus half-size chroma planes.

    Planes are copied on construction and frozen, so frames are safe to
    share between threads and to alias inside multiple clips.
    """

    luma: np.ndarray
    chroma_u: np.ndarray
    chroma_v: np.ndarray

    def __post_init__(self):
        y = np.asarray(self.luma)
        if y.ndim != 2:
            raise ValueError("luma must be a 2-D array")
        h, w = y.shape
        if h == 0 or w == 0 or h % 2 or w % 2:
            raise ValueError(f"frame geometry {w}x{h} must be nonzero and even")
        object.__setattr__(self, "luma", _own_plane(y, (h, w), "luma"))
        object.__setattr__(self, "chroma_u", _own_plane(self.chroma_u, (h // 2, w // 2), "chroma_u"))
        object.__setattr__(self, "chroma_v", _own_plane(self.chroma_v, (h // 2, w // 2), "chroma_v"))

    @property
    def height(self) -> int:
        return self.luma.shape[0]

    @property
    def width(self) -> int:
        return self.luma.shape[1]

    @classmethod
    def filled(cls, width: int, height: int, luma: int = 128, chroma: int = 128) -> "Frame":
        """Uniform frame, e.g. Frame.filled(w, h, 16) for studio black."""
        return cls(
            np.full((height, width), luma, dtype=np.uint8),
            np.full((height // 2, width // 2), chroma, dtype=np.uint8),
            np.full((height // 2, width // 2), chroma, dtype=np.uint8),
        )

    def with_planes(self, luma=None, chroma_u=None, chroma_v=None) -> "Frame":
        """Copy of this frame with some planes replaced."""
        return Frame(
            self.luma if luma is None else luma,
            self.chroma_u if chroma_u is None else chroma_u,
            self.chroma_v if chroma_v is None else chroma_v,
        )

    def __eq__(self, other):
        if not isinstance(other, Frame):
            return NotImplemented
        return (
            np.array_equal(self.luma, other.luma)
            and np.array_equal(self.chroma_u, other.chroma_u)
            and np.array_equal(self.chroma_v, other.chroma_v)
        )


@dataclass(frozen=True, eq=False)
class Clip:
    """An ordered sequence of frames sharing one geometry, plus a frame rate."""

    frames: tuple[Frame, ...]
    fps: Fraction = Fraction(25, 1)

    def __post_init__(self):
        frames = tuple(self.frames)
        if not frames:
            raise ValueError("clip must contain at least one frame")
        w, h = frames[0].width, frames[0].height
        for i, f in enumerate(frames):
            if f.width != w or f.height != h:
                raise ValueError(f"frame {i} geometry {f.width}x{f.height} != {w}x{h}")
        fps = Fraction(self.fps)
        if fps <= 0:
            raise ValueError("fps must be positive")
        object.__setattr__(self, "frames", frames)
        object.__setattr__(self, "fps", fps)

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height

    @property
    def length(self) -> int:
        return len(self.frames)

    def luma_stack(self) -> np.ndarray:
        """(length, height, width) uint8 view-stack of all luma planes."""
        return np.stack([f.luma for f in self.frames])

    def __eq__(self, other):
        if not isinstance(other, Clip):
            return NotImplemented
        return (
            self.fps == other.fps
            and len(self.frames) == len(other.frames)
            and all(a == b for a, b in zip(self.frames, other.frames))
        )


@dataclass(frozen=True)
class PatchWindow:
    """A spatio-temporal crop window: offsets, spatial size, temporal length.

    Spatial offsets must be even so the half-resolution chroma planes stay
    aligned with the luma crop.
    """

    x0: int
    y0: int
    t0: int
    w: int
    h: int
    length: int

    def __post_init__(self):
        if min(self.x0, self.y0, self.t0) < 0:
            raise ValueError("window offsets must be non-negative")
        if self.w <= 0 or self.h <= 0 or self.length <= 0:
            raise ValueError("window size must be positive")
        if self.w % 2 or self.h % 2:
            raise ValueError("window width and height must be even")
        if self.x0 % 2 or self.y0 % 2:
            raise ValueError("window x0/y0 must be even (4:2:0 chroma alignment)")


def crop_patch(clip: Clip, win: PatchWindow) -> Clip:
    """Cut the window out of the clip; every sample equals the co-located source sample."""
    if win.x0 + win.w > clip.width or win.y0 + win.h > clip.height:
        raise WindowBoundsError(
            f"window {win.w}x{win.h}+{win.x0}+{win.y0} exceeds clip {clip.width}x{clip.height}"
        )
    if win.t0 + win.length > clip.length:
        raise WindowBoundsError(
            f"window frames [{win.t0}, {win.t0 + win.length}) exceed clip length {clip.length}"
        )
    cx0, cy0 = win.x0 // 2, win.y0 // 2
    cw, ch = win.w // 2, win.h // 2
    frames = []
    for f in clip.frames[win.t0 : win.t0 + win.length]:
        frames.append(
            Frame(
                f.luma[win.y0 : win.y0 + win.h, win.x0 : win.x0 + win.w],
                f.chroma_u[cy0 : cy0 + ch, cx0 : cx0 + cw],
                f.chroma_v[cy0 : cy0 + ch, cx0 : cx0 + cw],
            )
        )
    return Clip(tuple(frames), clip.fps)


def _parse_header(line: bytes) -> tuple[int, int, Fraction]:
    fields = line.decode("ascii", errors="replace").rstrip("\n").split(" ")
    if fields[0] != "YUV4MPEG2":
        raise VideoFormatError("not a YUV4MPEG2 stream")
    width = height = None
    fps = Fraction(25, 1)
    sampling = "420"
    for tok in fields[1:]:
        if not tok:
            continue
        key, val = tok[0], tok[1:]
        try:
            if key == "W":
                width = int(val)
            elif key == "H":
                height = int(val)
            elif key == "F":
                num, den = val.split(":")
                fps = Fraction(int(num), int(den))
            elif key == "C":
                sampling = val
            # I (interlacing), A (aspect) and X (extensions) carry no
            # information the pixel model needs; accepted and dropped.
        except (ValueError, ZeroDivisionError) as exc:
            raise VideoFormatError(f"bad header token {tok!r}") from exc
    if sampling not in _C420_ALIASES:
        raise UnsupportedSamplingError(f"chroma sampling C{sampling} is not 4:2:0")
    if width is None or height is None:
        raise VideoFormatError("header missing W or H")
    if width <= 0 or height <= 0 or width % 2 or height % 2:
        raise VideoFormatError(f"unsupported geometry {width}x{height}")
    return width, height, fps


def read_y4m(path) -> Clip:
    """Read a C420 Y4M file into a Clip, bit-exactly."""
    with open(path, "rb") as fh:
        return _read_y4m_stream(fh)


def _read_y4m_stream(fh) -> Clip:
    header = fh.readline(4096)
    if not header.endswith(b"\n"):
        raise VideoFormatError("missing or overlong stream header")
    width, height, fps = _parse_header(header)
    y_size = width * height
    c_size = y_size // 4
    frames = []
    while True:
        marker = fh.readline(4096)
        if marker == b"":
            break
        if not marker.startswith(b"FRAME") or not marker.endswith(b"\n"):
            raise VideoFormatError(f"bad frame marker {marker[:16]!r}")
        payload = fh.read(y_size + 2 * c_size)
        if len(payload) != y_size + 2 * c_size:
            raise TruncatedStreamError(
                f"frame {len(frames)} truncated: {len(payload)} of {y_size + 2 * c_size} bytes"
            )
        y = np.frombuffer(payload, dtype=np.uint8, count=y_size).reshape(height, width)
        u = np.frombuffer(payload, dtype=np.uint8, count=c_size, offset=y_size)
        v = np.frombuffer(payload, dtype=np.uint8, count=c_size, offset=y_size + c_size)
        frames.append(
            Frame(y, u.reshape(height // 2, width // 2), v.reshape(height // 2, width // 2))
        )
    if not frames:
        raise VideoFormatError("stream contains no frames")
    return Clip(tuple(frames), fps)


def write_y4m(clip: Clip, path) -> None:
    """Write a Clip as a C420 Y4M file readable back bit-exactly by read_y4m."""
    with open(path, "wb") as fh:
        _write_y4m_stream(clip, fh)


def _write_y4m_stream(clip: Clip, fh) -> None:
    fps = clip.fps
    header = f"YUV4MPEG2 W{clip.width} H{clip.height} F{fps.numerator}:{fps.denominator} Ip A1:1 C420\n"
    fh.write(header.encode("ascii"))
    for frame in clip.frames:
        fh.write(b"FRAME\n")
        fh.write(frame.luma.tobytes())
        fh.write(frame.chroma_u.tobytes())
        fh.write(frame.chroma_v.tobytes())


def read_y4m_header(path) -> tuple[int, int, int, Fraction]:
    """Cheap scan of a Y4M file: (width, height, frame_count, fps).

    Reads the header line and seeks across frame payloads without loading
    them; used to build source inventories.
    """
    with open(path, "rb") as fh:
        header = fh.readline(4096)
        if not header.endswith(b"\n"):
            raise VideoFormatError("missing or overlong stream header")
        width, height, fps = _parse_header(header)
        frame_bytes = width * height * 3 // 2
        count = 0
        while True:
            marker = fh.readline(4096)
            if marker == b"":
                break
            if not marker.startswith(b"FRAME") or not marker.endswith(b"\n"):
                raise VideoFormatError(f"bad frame marker {marker[:16]!r}")
            start = fh.tell()
            fh.seek(frame_bytes, io.SEEK_CUR)
            if fh.tell() - start != frame_bytes:
                raise TruncatedStreamError(f"frame {count} truncated")
            count += 1
    if count == 0:
        raise VideoFormatError("stream contains no frames")
    return width, height, count, fps


def y4m_file_size(width: int, height: int, length: int, fps: Fraction = Fraction(25, 1)) -> int:
    """Exact byte size write_y4m will produce for the given geometry."""
    fps = Fraction(fps)
    header = f"YUV4MPEG2 W{width} H{height} F{fps.numerator}:{fps.denominator} Ip A1:1 C420\n"
    return len(header) + length * (len(b"FRAME\n") + width * height * 3 // 2)
