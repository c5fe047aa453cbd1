"""Dataset planning and execution: seeded artifact stacks over cropped patches.

Planning is pure arithmetic plus counter-based draws, so counts follow
closed-form products of the config and never depend on the master seed.
Execution turns planned records into Y4M patch files plus a newline-delimited
manifest; every random choice is fixed at plan time, so outputs are
bitwise-identical across runs and worker counts.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .errors import SourceResolutionError, SynthParameterError, ToolkitError
from .labels import LabelVector
from .seeding import derive_seed, make_rng
from .sources import Inventory, SourceInfo, synthetic_inventory
from .synth import (
    BLOCKINESS_QP,
    LEVEL_PARAMS,
    NONSOURCE_KINDS,
    SLICE_ROWS,
    SOURCE_KINDS,
    STOCHASTIC_KINDS,
    ArtifactKind,
    ArtifactSpec,
    IntensityLevel,
    apply_artifact,
    kind_from_name,
    level_from_name,
    subsample_frames,
    synth_motion_blur,
)
from .video import PatchWindow, crop_patch, read_y4m, write_y4m

MANIFEST_NAME = "manifest.jsonl"
PATCH_DIR = "patches"

# Optional = subject to an inclusion-probability draw (motion blur and
# blockiness are decided by source class and quantizer branch instead).
OPTIONAL_SOURCE_KINDS = SOURCE_KINDS[1:]
OPTIONAL_NONSOURCE_KINDS = NONSOURCE_KINDS[1:]

_LEVELS_DESC = tuple(IntensityLevel)  # harshest first


class Stage(Enum):
    BASELINE = "baseline"
    AUG_INTENSITY = "aug_intensity"
    AUG_RANDOM_ORDER = "aug_random_order"
    AUG_UGC = "aug_ugc"


@dataclass(frozen=True)
class PipelineConfig:
    """Counts, probabilities and geometry of one dataset generation run."""

    n_hd_sources: int = 100
    n_hfr_sources: int = 100
    n_ugc_sources: int = 60
    patches_per_source: int = 6
    source_repeats: int = 4
    nonsource_repeats: int = 4
    qp_list: tuple[int, ...] = (32, 47)
    inclusion_prob: float = 0.5
    patch_size: tuple[int, int, int] = (560, 560, 64)
    hfr_len: int = 512
    master_seed: int = 0

    def __post_init__(self):
        counts = (
            self.n_hd_sources,
            self.n_hfr_sources,
            self.n_ugc_sources,
            self.patches_per_source,
            self.source_repeats,
            self.nonsource_repeats,
        )
        if any(c < 1 for c in counts):
            raise ToolkitError("all pipeline counts must be >= 1")
        if not self.qp_list:
            raise ToolkitError("qp_list must be nonempty")
        if not 0.0 <= self.inclusion_prob <= 1.0:
            raise ToolkitError(f"inclusion_prob {self.inclusion_prob} outside [0, 1]")
        w, h, length = self.patch_size
        if w % 2 or h % 2 or w < 2 or h < 2 or length < 2:
            raise ToolkitError(f"bad patch geometry {self.patch_size}")
        if self.hfr_len % length:
            raise ToolkitError(f"hfr_len {self.hfr_len} not a multiple of patch length {length}")
        object.__setattr__(self, "qp_list", tuple(int(q) for q in self.qp_list))
        object.__setattr__(self, "patch_size", tuple(int(v) for v in self.patch_size))

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ToolkitError(f"unknown pipeline config keys: {sorted(unknown)}")
        return cls(**data)

    @property
    def source_patch_count(self) -> int:
        return self.patches_per_source * (self.n_hd_sources + self.n_hfr_sources)

    @property
    def hfr_stride(self) -> int:
        return self.hfr_len // self.patch_size[2]


def expected_counts(config: PipelineConfig) -> dict[str, int]:
    """Closed-form record counts per stage; independent of any seed."""
    s = config.source_patch_count
    per_stack = len(config.qp_list) * config.nonsource_repeats
    counts = {
        Stage.BASELINE.value: s * config.source_repeats * per_stack,
        Stage.AUG_INTENSITY.value: s * config.source_repeats,
        Stage.AUG_RANDOM_ORDER.value: s * config.source_repeats,
        Stage.AUG_UGC.value: config.patches_per_source * config.n_ugc_sources * per_stack,
    }
    counts["augmented"] = sum(counts[st.value] for st in (Stage.AUG_INTENSITY, Stage.AUG_RANDOM_ORDER, Stage.AUG_UGC))
    counts["total"] = counts[Stage.BASELINE.value] + counts["augmented"]
    return counts


@dataclass(frozen=True)
class ManifestRecord:
    patch_id: str
    source_id: str
    stage: Stage
    window: PatchWindow
    qp: int | None
    applied: tuple[ArtifactSpec, ...]
    labels: LabelVector
    seed: int
    output_path: str


# ---------------------------------------------------------------------------
# level feasibility at reduced geometry

def feasible_levels(kind: ArtifactKind, patch_size: tuple[int, int, int], stride: int = 1) -> tuple[IntensityLevel, ...]:
    """Levels whose parameter fits the patch geometry, harshest first.

    At full 560x560x64 geometry every level of every artifact fits; small
    test geometries can rule out the longest frozen/black runs and blur
    windows. stride only matters for motion blur.
    """
    w, h, length = patch_size
    out = []
    for level in _LEVELS_DESC:
        param = LEVEL_PARAMS[(kind, level)]
        if kind in (ArtifactKind.FRAME_DROP, ArtifactKind.BLACK_SCREEN):
            ok = param < length
        elif kind is ArtifactKind.MOTION_BLUR:
            ok = param <= length * stride and (stride == 1 or param <= 2 * stride)
        elif kind is ArtifactKind.SPATIAL_BLUR:
            ok = param <= min(w, h)
        elif kind is ArtifactKind.TRANSMISSION_ERROR:
            ok = h >= SLICE_ROWS
        else:
            ok = True
        if ok:
            out.append(level)
    if not out:
        raise SynthParameterError(f"no feasible level for {kind.cli_name} at geometry {patch_size}")
    return tuple(out)


def _harshest(kind: ArtifactKind, patch_size: tuple[int, int, int], stride: int = 1) -> IntensityLevel:
    return feasible_levels(kind, patch_size, stride)[0]


# ---------------------------------------------------------------------------
# planning

def _ordered_sources(inventory: Inventory, category: str, needed: int) -> list[SourceInfo]:
    have = sorted(inventory.of_class(category), key=lambda s: s.source_id)
    if len(have) < needed:
        raise SourceResolutionError(f"need {needed} {category} sources, inventory has {len(have)}")
    return have[:needed]


def _window_for(config: PipelineConfig, src: SourceInfo, patch_index: int) -> PatchWindow:
    w, h, length = config.patch_size
    win_len = config.hfr_len if src.category == "hfr" else length
    if src.width < w or src.height < h or src.length < win_len:
        raise SourceResolutionError(
            f"source {src.source_id} ({src.width}x{src.height}x{src.length}) "
            f"cannot host a {w}x{h}x{win_len} window"
        )
    rng = make_rng(derive_seed(config.master_seed, "window", src.source_id, patch_index))
    x0 = 2 * int(rng.integers(0, (src.width - w) // 2 + 1))
    y0 = 2 * int(rng.integers(0, (src.height - h) // 2 + 1))
    t0 = int(rng.integers(0, src.length - win_len + 1))
    return PatchWindow(x0, y0, t0, w, h, win_len)


def _source_stack(config: PipelineConfig, src: SourceInfo, patch_index: int, repeat: int) -> tuple[ArtifactSpec, ...]:
    """Seeded source-artifact stack shared by every descendant of (patch, repeat)."""
    rng = make_rng(derive_seed(config.master_seed, "src", src.source_id, patch_index, repeat))
    include = rng.random(len(OPTIONAL_SOURCE_KINDS)) < config.inclusion_prob
    grain_seed = int(rng.integers(0, 1 << 63))
    stack = []
    if src.category == "hfr":
        level = _harshest(ArtifactKind.MOTION_BLUR, config.patch_size, config.hfr_stride)
        stack.append(ArtifactSpec.for_level(ArtifactKind.MOTION_BLUR, level))
    for flag, kind in zip(include, OPTIONAL_SOURCE_KINDS):
        if flag:
            seed = grain_seed if kind in STOCHASTIC_KINDS else None
            stack.append(ArtifactSpec.for_level(kind, _harshest(kind, config.patch_size), seed))
    return tuple(stack)


def _nonsource_stack(
    config: PipelineConfig, namespace: str, parts: tuple, qp: int
) -> tuple[ArtifactSpec, ...]:
    """Quantizer branch plus the four optional non-source artifacts."""
    rng = make_rng(derive_seed(config.master_seed, namespace, *parts))
    include = rng.random(len(OPTIONAL_NONSOURCE_KINDS)) < config.inclusion_prob
    seeds = [int(v) for v in rng.integers(0, 1 << 63, size=3)]
    stack = []
    if qp == BLOCKINESS_QP:
        stack.append(ArtifactSpec.for_level(ArtifactKind.BLOCKINESS, IntensityLevel.VERY_NOTICEABLE))
    seed_iter = iter(seeds)
    for flag, kind in zip(include, OPTIONAL_NONSOURCE_KINDS):
        seed = next(seed_iter) if kind in STOCHASTIC_KINDS else None
        if flag:
            stack.append(ArtifactSpec.for_level(kind, _harshest(kind, config.patch_size), seed))
    return tuple(stack)


def _record(config: PipelineConfig, patch_id: str, src: SourceInfo, stage: Stage,
            window: PatchWindow, qp: int | None, applied: tuple[ArtifactSpec, ...],
            extra_labels: LabelVector | None = None) -> ManifestRecord:
    labels = LabelVector.from_kinds(spec.kind for spec in applied)
    if extra_labels is not None:
        labels = labels.merged_with(extra_labels)
    return ManifestRecord(
        patch_id=patch_id,
        source_id=src.source_id,
        stage=stage,
        window=window,
        qp=qp,
        applied=applied,
        labels=labels,
        seed=derive_seed(config.master_seed, patch_id),
        output_path=f"{PATCH_DIR}/{patch_id}.y4m",
    )


def plan_baseline(config: PipelineConfig, inventory: Inventory | None = None) -> list[ManifestRecord]:
    """Sequential-order plan: source stacks fanned out over quantizers and repeats."""
    if inventory is None:
        inventory = synthetic_inventory(config)
    sources = _ordered_sources(inventory, "hd", config.n_hd_sources) + _ordered_sources(
        inventory, "hfr", config.n_hfr_sources
    )
    records = []
    for src in sources:
        for pi in range(config.patches_per_source):
            window = _window_for(config, src, pi)
            for rs in range(config.source_repeats):
                src_stack = _source_stack(config, src, pi, rs)
                for qp in config.qp_list:
                    for rn in range(config.nonsource_repeats):
                        ns_stack = _nonsource_stack(
                            config, "nsrc", (src.source_id, pi, rs, qp, rn), qp
                        )
                        patch_id = f"b-{src.source_id}-p{pi}-r{rs}-q{qp}-n{rn}"
                        records.append(
                            _record(config, patch_id, src, Stage.BASELINE, window, qp, src_stack + ns_stack)
                        )
    return records


def _plan_intensity(config: PipelineConfig, sources: list[SourceInfo]) -> list[ManifestRecord]:
    """All five non-source artifacts on every source-artifact patch, levels drawn uniformly."""
    feasible = {kind: feasible_levels(kind, config.patch_size) for kind in NONSOURCE_KINDS}
    records = []
    for src in sources:
        for pi in range(config.patches_per_source):
            window = _window_for(config, src, pi)
            for rs in range(config.source_repeats):
                src_stack = _source_stack(config, src, pi, rs)
                rng = make_rng(derive_seed(config.master_seed, "aug-int", src.source_id, pi, rs))
                picks = {kind: feasible[kind][int(rng.integers(0, len(feasible[kind])))] for kind in NONSOURCE_KINDS}
                seeds = iter(int(v) for v in rng.integers(0, 1 << 63, size=3))
                ns_stack = tuple(
                    ArtifactSpec.for_level(kind, picks[kind], next(seeds) if kind in STOCHASTIC_KINDS else None)
                    for kind in NONSOURCE_KINDS
                )
                patch_id = f"i-{src.source_id}-p{pi}-r{rs}"
                records.append(
                    _record(config, patch_id, src, Stage.AUG_INTENSITY, window, None, src_stack + ns_stack)
                )
    return records


def _plan_random_order(config: PipelineConfig, sources: list[SourceInfo]) -> list[ManifestRecord]:
    """All ten artifacts in a seeded permutation, each with the inclusion draw.

    HFR patches must shed temporal length before any fixed-length artifact
    can run, so a drawn motion blur is hoisted to the front of the stack;
    when motion blur is not drawn the executor subsamples unlabeled.
    """
    records = []
    for src in sources:
        hfr = src.category == "hfr"
        stride = config.hfr_stride if hfr else 1
        for pi in range(config.patches_per_source):
            window = _window_for(config, src, pi)
            for rs in range(config.source_repeats):
                rng = make_rng(derive_seed(config.master_seed, "aug-ord", src.source_id, pi, rs))
                perm = [ArtifactKind(int(i)) for i in rng.permutation(len(ArtifactKind))]
                include = rng.random(len(ArtifactKind)) < config.inclusion_prob
                seed_pool = iter(int(v) for v in rng.integers(0, 1 << 63, size=len(STOCHASTIC_KINDS)))
                seeds = {kind: next(seed_pool) for kind in sorted(STOCHASTIC_KINDS)}
                drawn = [kind for kind, flag in zip(perm, include) if flag]
                stack = []
                for kind in drawn:
                    mb_stride = stride if kind is ArtifactKind.MOTION_BLUR else 1
                    level = _harshest(kind, config.patch_size, mb_stride)
                    stack.append(ArtifactSpec.for_level(kind, level, seeds.get(kind)))
                if hfr:
                    stack.sort(key=lambda s: 0 if s.kind is ArtifactKind.MOTION_BLUR else 1)
                patch_id = f"o-{src.source_id}-p{pi}-r{rs}"
                records.append(
                    _record(config, patch_id, src, Stage.AUG_RANDOM_ORDER, window, None, tuple(stack))
                )
    return records


def _plan_ugc(config: PipelineConfig, sources: list[SourceInfo]) -> list[ManifestRecord]:
    """Real-source patches: sidecar source labels, synthesized non-source stack."""
    records = []
    for src in sources:
        for pi in range(config.patches_per_source):
            window = _window_for(config, src, pi)
            for qp in config.qp_list:
                for rn in range(config.nonsource_repeats):
                    ns_stack = _nonsource_stack(config, "ugc", (src.source_id, pi, qp, rn), qp)
                    patch_id = f"u-{src.source_id}-p{pi}-q{qp}-n{rn}"
                    records.append(
                        _record(
                            config, patch_id, src, Stage.AUG_UGC, window, qp, ns_stack,
                            extra_labels=src.labels,
                        )
                    )
    return records


def plan_augmented(config: PipelineConfig, inventory: Inventory | None = None) -> list[ManifestRecord]:
    """The three augmentation sub-plans: intensity, random order, real UGC."""
    if inventory is None:
        inventory = synthetic_inventory(config)
    synth_sources = _ordered_sources(inventory, "hd", config.n_hd_sources) + _ordered_sources(
        inventory, "hfr", config.n_hfr_sources
    )
    ugc_sources = _ordered_sources(inventory, "ugc", config.n_ugc_sources)
    records = _plan_intensity(config, synth_sources)
    records += _plan_random_order(config, synth_sources)
    records += _plan_ugc(config, ugc_sources)
    return records


def plan_stages(config: PipelineConfig, inventory: Inventory | None = None,
                stages: tuple[Stage, ...] | None = None) -> list[ManifestRecord]:
    """Plan the requested stages (default: all four) in canonical order."""
    if inventory is None:
        inventory = synthetic_inventory(config)
    wanted = set(stages) if stages else set(Stage)
    records = []
    if Stage.BASELINE in wanted:
        records += plan_baseline(config, inventory)
    if wanted - {Stage.BASELINE}:
        augmented = plan_augmented(config, inventory)
        records += [r for r in augmented if r.stage in wanted]
    return records


# ---------------------------------------------------------------------------
# label bookkeeping

# Stages in which a kind's flag is decided by a draw or the quantizer
# alternation; everything else (always-on, source-class, sidecar) is excluded.
_ELIGIBLE: dict[Stage, frozenset[ArtifactKind]] = {
    Stage.BASELINE: frozenset(ArtifactKind) - {ArtifactKind.MOTION_BLUR},
    Stage.AUG_INTENSITY: frozenset(OPTIONAL_SOURCE_KINDS),
    Stage.AUG_RANDOM_ORDER: frozenset(ArtifactKind),
    Stage.AUG_UGC: frozenset(NONSOURCE_KINDS),
}


@dataclass(frozen=True)
class InclusionStat:
    eligible: int
    included: int

    @property
    def frequency(self) -> float:
        return self.included / self.eligible if self.eligible else float("nan")


def label_frequency(records: list[ManifestRecord]) -> dict[ArtifactKind, InclusionStat]:
    """Per-artifact inclusion frequency over each artifact's eligible records."""
    if not records:
        raise ToolkitError("label_frequency needs a nonempty plan")
    eligible = {kind: 0 for kind in ArtifactKind}
    included = {kind: 0 for kind in ArtifactKind}
    for rec in records:
        for kind in _ELIGIBLE[rec.stage]:
            eligible[kind] += 1
            included[kind] += rec.labels[kind]
    return {kind: InclusionStat(eligible[kind], included[kind]) for kind in ArtifactKind}


def label_violations(records: list[ManifestRecord]) -> list[str]:
    """Records whose label bits disagree with their applied stacks.

    Sidecar source labels on UGC records are part of the ground truth and
    are folded in before the comparison.
    """
    bad = []
    for rec in records:
        expect = LabelVector.from_kinds(spec.kind for spec in rec.applied)
        if rec.stage is Stage.AUG_UGC and rec.labels != expect:
            # every mismatching bit must be a source-artifact sidecar bit
            for kind in ArtifactKind:
                ok = rec.labels[kind] == expect[kind] or (
                    kind in SOURCE_KINDS and rec.labels[kind] == 1 and expect[kind] == 0
                )
                if not ok:
                    bad.append(f"{rec.patch_id}: bit {kind.cli_name} inconsistent with applied stack")
        elif rec.stage is not Stage.AUG_UGC and rec.labels != expect:
            bad.append(f"{rec.patch_id}: labels {rec.labels.bitstring()} != applied {expect.bitstring()}")
    return bad


# ---------------------------------------------------------------------------
# manifest serialization

def _spec_to_json(spec: ArtifactSpec) -> dict:
    param = spec.param
    doc = {"kind": spec.kind.cli_name, "level": spec.level.value,
           "param": int(param) if float(param).is_integer() else float(param)}
    if spec.seed is not None:
        doc["seed"] = spec.seed
    return doc


def _spec_from_json(doc: dict) -> ArtifactSpec:
    return ArtifactSpec(
        kind_from_name(doc["kind"]), level_from_name(doc["level"]), doc["param"], doc.get("seed")
    )


def record_to_json(rec: ManifestRecord) -> str:
    win = rec.window
    doc = {
        "patch_id": rec.patch_id,
        "source_id": rec.source_id,
        "stage": rec.stage.value,
        "window": {"x0": win.x0, "y0": win.y0, "t0": win.t0, "w": win.w, "h": win.h, "len": win.length},
        "qp": rec.qp,
        "applied": [_spec_to_json(s) for s in rec.applied],
        "labels": rec.labels.bitstring(),
        "seed": rec.seed,
        "path": rec.output_path,
    }
    return json.dumps(doc, separators=(",", ":"))


def record_from_json(line: str) -> ManifestRecord:
    doc = json.loads(line)
    win = doc["window"]
    return ManifestRecord(
        patch_id=doc["patch_id"],
        source_id=doc["source_id"],
        stage=Stage(doc["stage"]),
        window=PatchWindow(win["x0"], win["y0"], win["t0"], win["w"], win["h"], win["len"]),
        qp=doc["qp"],
        applied=tuple(_spec_from_json(s) for s in doc["applied"]),
        labels=LabelVector.from_bitstring(doc["labels"]),
        seed=doc["seed"],
        output_path=doc["path"],
    )


def write_manifest(records: list[ManifestRecord], path: Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for rec in records:
            fh.write(record_to_json(rec) + "\n")


def read_manifest(path: Path) -> list[ManifestRecord]:
    with open(path) as fh:
        return [record_from_json(line) for line in fh if line.strip()]


# ---------------------------------------------------------------------------
# execution

_SOURCE_CACHE: dict[str, object] = {}


def _load_source(path: str):
    clip = _SOURCE_CACHE.get(path)
    if clip is None:
        clip = read_y4m(path)
        if len(_SOURCE_CACHE) > 16:
            _SOURCE_CACHE.clear()
        _SOURCE_CACHE[path] = clip
    return clip


def synthesize_record(rec: ManifestRecord, source_path: str, target_len: int):
    """Produce the patch clip for one record; pure given the record."""
    clip = crop_patch(_load_source(source_path), rec.window)
    specs = list(rec.applied)
    stride = rec.window.length // target_len
    if stride > 1:
        if specs and specs[0].kind is ArtifactKind.MOTION_BLUR:
            clip = synth_motion_blur(clip, specs.pop(0), stride=stride)
        else:
            clip = subsample_frames(clip, stride)
    for spec in specs:
        clip = apply_artifact(clip, spec)
    if clip.length != target_len:
        raise ToolkitError(f"{rec.patch_id}: synthesized length {clip.length} != {target_len}")
    return clip


def _execute_one(args: tuple) -> str:
    rec, source_path, target_len, out_dir = args
    clip = synthesize_record(rec, source_path, target_len)
    out_path = Path(out_dir) / rec.output_path
    write_y4m(clip, out_path)
    return rec.patch_id


@dataclass(frozen=True)
class ExecutionReport:
    manifest_path: Path
    patch_count: int


def execute_plan(records: list[ManifestRecord], inventory: Inventory, out_dir: Path,
                 config: PipelineConfig, jobs: int = 1) -> ExecutionReport:
    """Synthesize every planned patch and write the manifest in plan order."""
    out_dir = Path(out_dir)
    (out_dir / PATCH_DIR).mkdir(parents=True, exist_ok=True)
    target_len = config.patch_size[2]
    tasks = [(rec, str(inventory.resolve_path(rec.source_id)), target_len, str(out_dir)) for rec in records]
    if jobs <= 1:
        for task in tasks:
            _execute_one(task)
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunk = max(1, len(tasks) // (jobs * 4))
            for _ in pool.map(_execute_one, tasks, chunksize=chunk):
                pass
    manifest_path = out_dir / MANIFEST_NAME
    write_manifest(records, manifest_path)
    return ExecutionReport(manifest_path, len(records))


def dataset_digests(out_dir: Path) -> dict[str, str]:
    """SHA-256 of the manifest and every patch file, keyed by relative path."""
    out_dir = Path(out_dir)
    digests = {}
    for path in sorted([out_dir / MANIFEST_NAME, *(out_dir / PATCH_DIR).glob("*.y4m")]):
        digests[str(path.relative_to(out_dir))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return digests
