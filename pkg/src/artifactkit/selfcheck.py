"""Embedded invariant suite behind the `selfcheck` subcommand.

Each check is tiny, self-contained, and named; the CLI prints one line per
check and fails the run if any invariant does not hold. A fault-injection
hook exists so the failure path itself is testable.
"""

from __future__ import annotations

import tempfile
from dataclasses import dataclass
from math import log
from pathlib import Path

import numpy as np

from .errors import ParamsLayoutError, ToolkitError
from .evaluation import roc_auc
from .labels import LabelVector
from .losses import Batch, bce_loss, contrastive_loss
from .model import AdfeConfig, RmvitConfig, adfe_masks, init_params, load_params, predict_heads, save_params
from .pipeline import PipelineConfig, expected_counts, label_violations, plan_augmented, plan_baseline
from .seeding import make_rng
from .sources import natural_clip

INJECTABLE_FAULTS = ("layout",)


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str


def _tiny_config() -> PipelineConfig:
    return PipelineConfig(
        n_hd_sources=1, n_hfr_sources=1, n_ugc_sources=1, patches_per_source=1,
        source_repeats=1, nonsource_repeats=1, qp_list=(32, 47),
        patch_size=(32, 32, 16), hfr_len=128, master_seed=3,
    )


def _check_counting() -> tuple[bool, str]:
    config = _tiny_config()
    want = expected_counts(config)
    base = plan_baseline(config)
    aug = plan_augmented(config)
    ok = len(base) == want["baseline"] and len(aug) == want["augmented"]
    return ok, f"planned {len(base)}+{len(aug)} records match closed-form {want['total']}"


def _check_label_soundness() -> tuple[bool, str]:
    config = _tiny_config()
    bad = label_violations(plan_baseline(config) + plan_augmented(config))
    return not bad, f"{len(bad)} label/applied mismatches"


def _check_mask_one_hot() -> tuple[bool, str]:
    adfe = AdfeConfig(input_size=(16, 16), levels=2, channels=(4, 8), gen_hidden=8, embed_dim=32)
    params = init_params(11, adfe, RmvitConfig())
    frame = natural_clip(16, 16, 1, seed=2).frames[0]
    masks = adfe_masks(frame, params)
    ok = all(
        np.array_equal(np.unique(m), np.array([0.0, 1.0])) and (m.sum(axis=0) == 1.0).all()
        for m in masks
    )
    return ok, "guided masks one-hot at every site on both levels"


def _check_phi_threshold() -> tuple[bool, str]:
    rmvit = RmvitConfig()
    params = init_params(5, AdfeConfig(), rmvit)
    for name, tensor in params.tensors.items():
        if name.startswith("head"):
            tensor[...] = 0.0  # sigmoid(0) = 0.5 on every head
    outs = predict_heads(np.zeros(rmvit.out_dim), params)
    ok = all(o.probability == 0.5 and o.label == 0 for o in outs)
    return ok, "p = 0.5 boundary maps to label 0 on all ten heads"


def _check_auc_dual() -> tuple[bool, str]:
    fixture = roc_auc([1, 1, 0, 0], [0.8, 0.2, 0.6, 0.1])
    if fixture.auc != 0.75:
        return False, f"fixture AUC {fixture.auc} != 0.75"
    rng = make_rng(17)
    for _ in range(50):
        n = int(rng.integers(4, 30))
        labels = rng.integers(0, 2, n)
        if labels.min() == labels.max():
            labels[0] = 1 - labels[0]
        scores = rng.integers(0, 5, n) / 4.0
        roc_auc(labels, scores)  # raises if sweep and pairwise routes diverge
    return True, "sweep and pairwise AUC agree on fixture plus 50 tied sets"


def _check_bce_ln2() -> tuple[bool, str]:
    value = bce_loss(LabelVector.from_bitstring("1010010001"), np.full(10, 0.5))
    ok = abs(value - log(2)) < 1e-12
    return ok, f"all-0.5 BCE = {value:.12f} matches ln 2"


def _check_contrastive_log2() -> tuple[bool, str]:
    a = LabelVector.from_bitstring("1000000000")
    b = LabelVector.from_bitstring("0100000000")
    batch = Batch(np.array([[1.0, 2.0, 3.0]] * 3), (a, a, b), np.full((3, 10), 0.5))
    losses = contrastive_loss(batch)
    ok = abs(losses[0] - log(2)) < 1e-9 and abs(losses[1] - log(2)) < 1e-9 and losses[2] == 0.0
    return ok, "three identical representations give log 2 with one empty-positive zero"


def _check_params_layout(inject_fault: str | None) -> tuple[bool, str]:
    adfe = AdfeConfig(input_size=(16, 16), levels=1, channels=(4,), gen_hidden=4, embed_dim=16)
    params = init_params(7, adfe, RmvitConfig(vit_dim=16, vit_heads=2, out_dim=8, head_hidden=4))
    with tempfile.TemporaryDirectory() as tmp:
        path = Path(tmp) / "params.akp"
        save_params(params, path)
        if inject_fault == "layout":
            path.write_bytes(path.read_bytes()[:-4])  # drop one float
        try:
            loaded = load_params(path)
        except ParamsLayoutError as exc:
            return False, f"layout rejected: {exc}"
        same = all(np.array_equal(loaded.tensors[k], v) for k, v in params.tensors.items())
        return same, "round-trip preserves every tensor byte"


def run_selfcheck(inject_fault: str | None = None) -> list[CheckResult]:
    if inject_fault is not None and inject_fault not in INJECTABLE_FAULTS:
        raise ToolkitError(f"unknown fault {inject_fault!r}; choose from {INJECTABLE_FAULTS}")
    checks = [
        ("counting-closed-form", _check_counting),
        ("label-soundness", _check_label_soundness),
        ("mask-one-hot", _check_mask_one_hot),
        ("phi-threshold", _check_phi_threshold),
        ("auc-dual", _check_auc_dual),
        ("bce-ln2", _check_bce_ln2),
        ("contrastive-log2", _check_contrastive_log2),
        ("params-layout", lambda: _check_params_layout(inject_fault)),
    ]
    results = []
    for name, fn in checks:
        try:
            passed, detail = fn()
        except Exception as exc:  # a crashed check is a failed check
            passed, detail = False, f"{type(exc).__name__}: {exc}"
        results.append(CheckResult(name, passed, detail))
    return results
