"""Y4M round trips, header handling, and crop-window arithmetic."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest

from artifactkit.errors import (
    TruncatedStreamError,
    UnsupportedSamplingError,
    VideoFormatError,
    WindowBoundsError,
)
from artifactkit.video import (
    Clip,
    Frame,
    PatchWindow,
    crop_patch,
    read_y4m,
    read_y4m_header,
    write_y4m,
    y4m_file_size,
)
from helpers import const_clip, moving_clip


def test_round_trip_bit_exact(tmp_path):
    clip = moving_clip(32, 16, 5)
    path = tmp_path / "clip.y4m"
    write_y4m(clip, path)
    back = read_y4m(path)
    assert back == clip
    assert back.fps == Fraction(25)


def test_round_trip_twice_identical_bytes(tmp_path):
    clip = moving_clip(16, 16, 3)
    a, b = tmp_path / "a.y4m", tmp_path / "b.y4m"
    write_y4m(clip, a)
    write_y4m(read_y4m(a), b)
    assert a.read_bytes() == b.read_bytes()


def test_constant_gray_stream(tmp_path):
    path = tmp_path / "gray.y4m"
    frame = b"FRAME\n" + bytes([128]) * (64 + 16 + 16)
    path.write_bytes(b"YUV4MPEG2 W8 H8 F25:1 Ip A1:1 C420jpeg\n" + frame * 2)
    clip = read_y4m(path)
    assert clip.length == 2 and clip.width == 8 and clip.height == 8
    assert all(np.all(f.luma == 128) for f in clip.frames)


def test_c420_alias_tags_accepted(tmp_path):
    payload = b"FRAME\n" + bytes(range(64)) + bytes([128]) * 32
    for tag in (b"C420", b"C420jpeg", b"C420mpeg2", b"C420paldv"):
        path = tmp_path / f"{tag.decode()}.y4m"
        path.write_bytes(b"YUV4MPEG2 W8 H8 F30:1 " + tag + b"\n" + payload)
        assert read_y4m(path).length == 1


def test_non_420_sampling_rejected(tmp_path):
    path = tmp_path / "c444.y4m"
    path.write_bytes(b"YUV4MPEG2 W8 H8 F25:1 C444\n" + b"FRAME\n" + bytes([0]) * 192)
    with pytest.raises(UnsupportedSamplingError):
        read_y4m(path)


def test_truncated_payload_rejected(tmp_path):
    path = tmp_path / "short.y4m"
    path.write_bytes(b"YUV4MPEG2 W8 H8 F25:1 C420\n" + b"FRAME\n" + bytes([0]) * 40)
    with pytest.raises(TruncatedStreamError):
        read_y4m(path)


def test_bad_magic_rejected(tmp_path):
    path = tmp_path / "junk.y4m"
    path.write_bytes(b"NOTAVIDEO W8 H8\n")
    with pytest.raises(VideoFormatError):
        read_y4m(path)


def test_bad_frame_marker_rejected(tmp_path):
    path = tmp_path / "marker.y4m"
    path.write_bytes(b"YUV4MPEG2 W8 H8 F25:1 C420\n" + b"BLOCK\n" + bytes([0]) * 96)
    with pytest.raises(VideoFormatError):
        read_y4m(path)


def test_file_size_arithmetic(tmp_path):
    clip = const_clip(16, 8, 3)
    path = tmp_path / "sized.y4m"
    write_y4m(clip, path)
    assert path.stat().st_size == y4m_file_size(16, 8, 3)


def test_header_probe_matches_geometry(tmp_path):
    clip = moving_clip(32, 32, 7)
    path = tmp_path / "probe.y4m"
    write_y4m(clip, path)
    w, h, n, fps = read_y4m_header(path)
    assert (w, h, n, fps) == (32, 32, 7, Fraction(25))


def test_empty_clip_rejected():
    with pytest.raises(ValueError):
        Clip((), Fraction(25))


def test_crop_identity():
    clip = moving_clip(32, 16, 4)
    win = PatchWindow(0, 0, 0, 32, 16, 4)
    assert crop_patch(clip, win) == clip


def test_crop_ramp_oracle():
    luma = np.arange(64, dtype=np.uint8).reshape(8, 8)
    chroma = np.arange(16, dtype=np.uint8).reshape(4, 4)
    clip = Clip((Frame(luma, chroma, chroma),), Fraction(25))
    out = crop_patch(clip, PatchWindow(2, 4, 0, 2, 2, 1))
    assert out.frames[0].luma.tolist() == [[34, 35], [42, 43]]
    assert out.frames[0].chroma_u.tolist() == [[9]]


def test_crop_composition():
    clip = moving_clip(64, 64, 8)
    outer = PatchWindow(8, 16, 2, 32, 32, 4)
    inner = PatchWindow(4, 8, 1, 16, 16, 2)
    composed = PatchWindow(8 + 4, 16 + 8, 2 + 1, 16, 16, 2)
    assert crop_patch(crop_patch(clip, outer), inner) == crop_patch(clip, composed)


def test_crop_out_of_bounds():
    clip = const_clip(16, 16, 2)
    with pytest.raises(WindowBoundsError):
        crop_patch(clip, PatchWindow(8, 0, 0, 10, 8, 1))
    with pytest.raises(WindowBoundsError):
        crop_patch(clip, PatchWindow(0, 0, 1, 8, 8, 2))


def test_window_requires_even_alignment():
    with pytest.raises(ValueError):
        PatchWindow(1, 0, 0, 8, 8, 1)
    with pytest.raises(ValueError):
        PatchWindow(0, 0, 0, 7, 8, 1)
