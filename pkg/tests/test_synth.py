"""Calibration oracles and determinism contracts for the ten synthesizers."""

from __future__ import annotations

import numpy as np
import pytest

from artifactkit.errors import SynthParameterError
from artifactkit.synth import (
    ArtifactKind,
    ArtifactSpec,
    IntensityLevel,
    STOCHASTIC_KINDS,
    apply_artifact,
    gaussian_kernel,
    level_param,
    subsample_frames,
    synth_aliasing,
    synth_banding,
    synth_black_screen,
    synth_blockiness,
    synth_dark_scene,
    synth_frame_drop,
    synth_graininess,
    synth_motion_blur,
    synth_spatial_blur,
    transmission_error_with_log,
)
from artifactkit.synth import _block_codec
from helpers import checker_clip, const_clip, laplacian_variance, moving_clip, ramp_clip

VN, N, S, VS = IntensityLevel


def spec_for(kind, level, seed=None):
    return ArtifactSpec.for_level(kind, level, seed)


# ---------------------------------------------------------------------------
# parameter table

def test_level_param_table_corners():
    assert level_param(ArtifactKind.GRAININESS, VN) == 50
    assert level_param(ArtifactKind.GRAININESS, VS) == 5
    assert level_param(ArtifactKind.BANDING, VN) == 5
    assert level_param(ArtifactKind.BLOCKINESS, VN) == 47
    assert level_param(ArtifactKind.BLOCKINESS, VS) == 32
    assert level_param(ArtifactKind.DARK_SCENE, VS) == 1.5
    assert level_param(ArtifactKind.MOTION_BLUR, VN) == 16


def test_spec_rejects_off_table_param():
    with pytest.raises(SynthParameterError):
        ArtifactSpec(ArtifactKind.BANDING, VN, 31)


def test_stochastic_kinds_require_seed():
    for kind in STOCHASTIC_KINDS:
        with pytest.raises(SynthParameterError):
            ArtifactSpec.for_level(kind, VS)


def test_kind_mismatch_rejected():
    spec = spec_for(ArtifactKind.BANDING, VN)
    with pytest.raises(SynthParameterError):
        synth_dark_scene(const_clip(), spec)


# ---------------------------------------------------------------------------
# aliasing

def test_aliasing_constant_invariant():
    clip = const_clip(16, 16, 2, luma=77)
    out = synth_aliasing(clip, spec_for(ArtifactKind.ALIASING, VN))
    assert out == clip


def test_aliasing_checkerboard_ratio2():
    # period-1 checkerboard collapses to the even-index value under a 2:1
    # nearest-neighbour round trip
    clip = checker_clip(8, 8, 1, lo=10, hi=200)
    out = synth_aliasing(clip, spec_for(ArtifactKind.ALIASING, S))
    assert np.all(out.frames[0].luma == 10)


def test_aliasing_fractional_ratio_keeps_geometry():
    clip = moving_clip(48, 48, 2)
    out = synth_aliasing(clip, spec_for(ArtifactKind.ALIASING, VS))
    assert (out.width, out.height, out.length) == (48, 48, 2)
    assert np.any(out.frames[0].luma != clip.frames[0].luma)


# ---------------------------------------------------------------------------
# banding

def test_banding_ramp_distinct_levels():
    out = synth_banding(ramp_clip(), spec_for(ArtifactKind.BANDING, VN))
    assert len(np.unique(out.frames[0].luma)) == 8


def test_banding_fixed_point():
    clip = const_clip(16, 16, 1, luma=96)  # multiple of 32
    assert synth_banding(clip, spec_for(ArtifactKind.BANDING, VN)) == clip


def test_banding_255_to_252_at_step4():
    clip = const_clip(8, 8, 1, luma=255)
    out = synth_banding(clip, spec_for(ArtifactKind.BANDING, VS))
    assert np.all(out.frames[0].luma == 252)


def test_banding_idempotent():
    spec = spec_for(ArtifactKind.BANDING, N)
    once = synth_banding(ramp_clip(), spec)
    assert synth_banding(once, spec) == once


# ---------------------------------------------------------------------------
# dark scene

def test_dark_constant_quarter():
    clip = const_clip(8, 8, 1, luma=200)
    out = synth_dark_scene(clip, spec_for(ArtifactKind.DARK_SCENE, VN))
    assert np.all(out.frames[0].luma == 50)


def test_dark_zero_fixed_point():
    clip = const_clip(8, 8, 2, luma=0)
    assert synth_dark_scene(clip, spec_for(ArtifactKind.DARK_SCENE, VN)) == clip


def test_dark_mean_ratio(natural64):
    for level, ratio in ((VN, 4), (N, 3), (S, 2), (VS, 1.5)):
        out = synth_dark_scene(natural64, spec_for(ArtifactKind.DARK_SCENE, level))
        got = out.frames[0].luma.mean()
        want = natural64.frames[0].luma.astype(np.float64).mean() / ratio
        assert abs(got - want) <= 0.5


# ---------------------------------------------------------------------------
# graininess

def test_graininess_std_calibration():
    clip = const_clip(64, 64, 8)
    out = synth_graininess(clip, spec_for(ArtifactKind.GRAININESS, N, seed=3))
    delta = out.luma_stack().astype(np.float64) - 128.0
    assert abs(delta.std() - 25.0) < 0.5


def test_graininess_deterministic():
    clip = moving_clip(32, 32, 4)
    spec = spec_for(ArtifactKind.GRAININESS, S, seed=11)
    assert synth_graininess(clip, spec) == synth_graininess(clip, spec)
    other = synth_graininess(clip, spec_for(ArtifactKind.GRAININESS, S, seed=12))
    assert other != synth_graininess(clip, spec)


# ---------------------------------------------------------------------------
# motion blur

def test_motion_blur_static_equals_subsample():
    clip = const_clip(16, 16, 64, luma=90)
    out = synth_motion_blur(clip, spec_for(ArtifactKind.MOTION_BLUR, VN), stride=8)
    assert out == subsample_frames(clip, 8)


def test_motion_blur_alternating_average():
    frames = [const_clip(8, 8, 1, luma=0 if t % 2 else 255).frames[0] for t in range(8)]
    from artifactkit.video import Clip
    clip = Clip(tuple(frames), const_clip().fps)
    out = synth_motion_blur(clip, spec_for(ArtifactKind.MOTION_BLUR, VS), stride=2)
    for f in out.frames:
        assert np.all((f.luma == 127) | (f.luma == 128))


def test_motion_blur_window_oracle():
    clip = moving_clip(16, 16, 8)
    out = synth_motion_blur(clip, spec_for(ArtifactKind.MOTION_BLUR, VS), stride=1)
    ys = clip.luma_stack().astype(np.float64)
    assert out.length == 8
    for t in range(8):
        start = min(max(t - 2, 0), 8 - 4)
        want = np.rint(ys[start : start + 4].mean(axis=0)).astype(np.uint8)
        assert np.array_equal(out.frames[t].luma, want)


def test_motion_blur_constraints():
    clip = moving_clip(16, 16, 8)
    with pytest.raises(SynthParameterError):
        synth_motion_blur(clip, spec_for(ArtifactKind.MOTION_BLUR, VN), stride=3)
    with pytest.raises(SynthParameterError):
        synth_motion_blur(clip, spec_for(ArtifactKind.MOTION_BLUR, VN), stride=2)
    with pytest.raises(SynthParameterError):
        synth_motion_blur(moving_clip(16, 16, 12), spec_for(ArtifactKind.MOTION_BLUR, VN), stride=1)


# ---------------------------------------------------------------------------
# blockiness

def test_blockiness_constant_blocks_survive():
    luma = np.kron(np.arange(16, dtype=np.uint8).reshape(4, 4) * 16, np.ones((8, 8), np.uint8))
    from artifactkit.video import Clip, Frame
    chroma = np.full((16, 16), 128, np.uint8)
    clip = Clip((Frame(luma, chroma, chroma),), const_clip().fps)
    out = synth_blockiness(clip, spec_for(ArtifactKind.BLOCKINESS, VN))
    assert out == clip


def test_blockiness_subunit_qstep_near_identity():
    rng = np.random.default_rng(0)
    luma = rng.integers(0, 256, (24, 24)).astype(np.uint8)
    out = _block_codec(luma, qp=2.0)  # qstep < 1
    assert np.max(np.abs(out.astype(int) - luma.astype(int))) <= 1


def test_blockiness_error_grows_with_qp(natural64):
    base = natural64.frames[0].luma.astype(np.float64)
    mae = {}
    for level in (VS, VN):
        out = synth_blockiness(natural64, spec_for(ArtifactKind.BLOCKINESS, level))
        mae[level] = np.abs(out.frames[0].luma - base).mean()
    assert mae[VN] > mae[VS]


# ---------------------------------------------------------------------------
# spatial blur

def test_blur_kernel_normalized_and_odd_only():
    k = gaussian_kernel(5)
    assert abs(k.sum() - 1.0) < 1e-12
    assert np.array_equal(k, k[::-1])
    with pytest.raises(SynthParameterError):
        gaussian_kernel(4)


def test_blur_constant_invariant():
    clip = const_clip(16, 16, 2, luma=73)
    assert synth_spatial_blur(clip, spec_for(ArtifactKind.SPATIAL_BLUR, VN)) == clip


def test_blur_impulse_spreads():
    luma = np.zeros((16, 16), np.uint8)
    luma[8, 8] = 255
    from artifactkit.video import Clip, Frame
    chroma = np.full((8, 8), 128, np.uint8)
    clip = Clip((Frame(luma, chroma, chroma),), const_clip().fps)
    out = synth_spatial_blur(clip, spec_for(ArtifactKind.SPATIAL_BLUR, VS)).frames[0].luma
    assert out[8, 8] < 255
    assert np.all(out[7:10, 7:10].astype(int)[np.ones((3, 3), bool)] > 0)


def test_blur_sharpness_monotone(natural64):
    sharp = laplacian_variance(natural64.frames[0].luma)
    k3 = synth_spatial_blur(natural64, spec_for(ArtifactKind.SPATIAL_BLUR, VS))
    k9 = synth_spatial_blur(natural64, spec_for(ArtifactKind.SPATIAL_BLUR, VN))
    v3 = laplacian_variance(k3.frames[0].luma)
    v9 = laplacian_variance(k9.frames[0].luma)
    assert v9 < v3 < sharp


# ---------------------------------------------------------------------------
# frame drop

def test_frame_drop_freezes_one_run():
    clip = moving_clip(32, 32, 16)
    out = synth_frame_drop(clip, spec_for(ArtifactKind.FRAME_DROP, VS, seed=9))
    runs, current = [], 1
    for a, b in zip(out.frames, out.frames[1:]):
        if a == b:
            current += 1
        else:
            runs.append(current)
            current = 1
    runs.append(current)
    assert sum(1 for r in runs if r >= 4) == 1
    assert max(runs) == 5  # the frozen run plus its reference frame


def test_frame_drop_static_identity():
    clip = const_clip(16, 16, 8)
    out = synth_frame_drop(clip, spec_for(ArtifactKind.FRAME_DROP, VS, seed=2))
    assert out == clip


def test_frame_drop_run_must_fit():
    with pytest.raises(SynthParameterError):
        synth_frame_drop(moving_clip(16, 16, 16), spec_for(ArtifactKind.FRAME_DROP, VN, seed=1))


# ---------------------------------------------------------------------------
# black screen

def test_black_screen_exact_run():
    clip = moving_clip(32, 32, 16)
    out = synth_black_screen(clip, spec_for(ArtifactKind.BLACK_SCREEN, VS, seed=4))
    black = [t for t, f in enumerate(out.frames)
             if np.all(f.luma == 16) and np.all(f.chroma_u == 128) and np.all(f.chroma_v == 128)]
    assert len(black) == 4
    assert black == list(range(black[0], black[0] + 4))
    for t, f in enumerate(out.frames):
        if t not in black:
            assert f == clip.frames[t]


def test_black_screen_deterministic():
    clip = moving_clip(16, 16, 16)
    spec = spec_for(ArtifactKind.BLACK_SCREEN, S, seed=21)
    assert synth_black_screen(clip, spec) == synth_black_screen(clip, spec)


# ---------------------------------------------------------------------------
# transmission error

def test_transmission_static_concealment_invisible():
    clip = const_clip(64, 64, 8, luma=50)
    out, losses = transmission_error_with_log(clip, spec_for(ArtifactKind.TRANSMISSION_ERROR, VN, seed=6))
    assert losses and all(t > 0 for t, _ in losses[4:])
    for t in range(1, 8):
        assert out.frames[t] == clip.frames[t]
    # frame 0 conceals with mid-gray, so its lost rows read 128
    assert np.any(out.frames[0].luma == 128)


def test_transmission_loss_count_and_rows():
    clip = moving_clip(64, 64, 8)
    out, losses = transmission_error_with_log(clip, spec_for(ArtifactKind.TRANSMISSION_ERROR, VN, seed=6))
    assert len(losses) == 4 * 8
    lost = {(t, s) for t, s in losses}
    for t, s in losses:
        rows = slice(s * 16, (s + 1) * 16)
        crows = slice(s * 8, (s + 1) * 8)
        if t == 0:
            assert np.all(out.frames[0].luma[rows] == 128)
        else:
            assert np.array_equal(out.frames[t].luma[rows], clip.frames[t - 1].luma[rows])
            assert np.array_equal(out.frames[t].chroma_u[crows], clip.frames[t - 1].chroma_u[crows])
    for t in range(8):
        intact = [s for s in range(4) if (t, s) not in lost]
        for s in intact:
            rows = slice(s * 16, (s + 1) * 16)
            assert np.array_equal(out.frames[t].luma[rows], clip.frames[t].luma[rows])


def test_transmission_subtle_affects_fraction():
    clip = moving_clip(32, 32, 64)
    _, losses = transmission_error_with_log(clip, spec_for(ArtifactKind.TRANSMISSION_ERROR, S, seed=8))
    frames_hit = {t for t, _ in losses}
    assert 0 < len(frames_hit) < 64
    per_frame = {t: sum(1 for tt, _ in losses if tt == t) for t in frames_hit}
    assert all(c == 1 for c in per_frame.values())


# ---------------------------------------------------------------------------
# dispatch

def test_apply_artifact_dispatch_matches_direct():
    clip = moving_clip(32, 32, 16)
    spec = spec_for(ArtifactKind.BANDING, VN)
    assert apply_artifact(clip, spec) == synth_banding(clip, spec)
    mb = spec_for(ArtifactKind.MOTION_BLUR, VS)
    assert apply_artifact(clip, mb, stride=2) == synth_motion_blur(clip, mb, stride=2)


def test_geometry_preserved_by_all_nontemporal_kinds():
    clip = moving_clip(32, 32, 16)
    for kind in ArtifactKind:
        if kind is ArtifactKind.MOTION_BLUR:
            continue
        level = VS if kind is not ArtifactKind.TRANSMISSION_ERROR else VN
        seed = 5 if kind in STOCHASTIC_KINDS else None
        out = apply_artifact(clip, spec_for(kind, level, seed))
        assert (out.width, out.height, out.length) == (32, 32, 16), kind
