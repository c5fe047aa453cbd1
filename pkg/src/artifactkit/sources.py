"""Source-clip inventories: directory layout, sidecar labels, synthetic stand-ins.

A source directory holds Y4M files plus an ``inventory.json`` naming each
source and its class (hd, hfr, or ugc). UGC sources additionally need a
sidecar label file because their real-world source artifacts cannot be
derived from the pixels.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

import numpy as np

from .errors import AnnotationError, SourceResolutionError
from .labels import LabelVector
from .seeding import derive_seed, make_rng
from .synth import NONSOURCE_KINDS
from .video import Clip, Frame, read_y4m_header, write_y4m

INVENTORY_NAME = "inventory.json"
UGC_LABELS_NAME = "ugc_labels.jsonl"

SOURCE_CLASSES = ("hd", "hfr", "ugc")


@dataclass(frozen=True)
class SourceInfo:
    """One catalogued source clip; path is None for planning-only stand-ins."""

    source_id: str
    category: str
    width: int
    height: int
    length: int
    path: str | None = None
    labels: LabelVector | None = None

    def __post_init__(self):
        if self.category not in SOURCE_CLASSES:
            raise SourceResolutionError(f"{self.source_id}: unknown source class {self.category!r}")
        if self.category == "ugc":
            if self.labels is None:
                raise AnnotationError(f"{self.source_id}: ugc source is missing sidecar labels")
            for kind in NONSOURCE_KINDS:
                if self.labels[kind]:
                    raise AnnotationError(
                        f"{self.source_id}: sidecar may only flag source artifacts, found {kind.cli_name}"
                    )
        elif self.labels is not None:
            raise AnnotationError(f"{self.source_id}: only ugc sources carry sidecar labels")


class Inventory:
    """All sources of one directory (or synthetic stand-ins), indexed by id."""

    def __init__(self, sources: list[SourceInfo], root: Path | None = None):
        self.root = root
        self.by_id: dict[str, SourceInfo] = {}
        for src in sources:
            if src.source_id in self.by_id:
                raise SourceResolutionError(f"duplicate source id {src.source_id}")
            self.by_id[src.source_id] = src

    def of_class(self, category: str) -> list[SourceInfo]:
        return [s for s in self.by_id.values() if s.category == category]

    def resolve_path(self, source_id: str) -> Path:
        src = self.by_id.get(source_id)
        if src is None or src.path is None or self.root is None:
            raise SourceResolutionError(f"source {source_id} has no backing file")
        return self.root / src.path


def read_ugc_sidecar(path: Path) -> dict[str, LabelVector]:
    """Parse the newline-delimited sidecar of per-source label bitstrings."""
    labels: dict[str, LabelVector] = {}
    for lineno, line in enumerate(path.read_text().splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            labels[rec["source_id"]] = LabelVector.from_bitstring(rec["labels"])
        except (KeyError, ValueError) as exc:
            raise AnnotationError(f"{path}:{lineno}: bad sidecar record ({exc})") from exc
    return labels


def build_inventory(root: Path) -> Inventory:
    """Load the inventory of a source directory, reading geometry from headers."""
    root = Path(root)
    index = root / INVENTORY_NAME
    if not index.is_file():
        raise SourceResolutionError(f"no {INVENTORY_NAME} in {root}")
    doc = json.loads(index.read_text())
    sidecar: dict[str, LabelVector] = {}
    sidecar_path = doc.get("ugc_labels")
    if sidecar_path is not None:
        sidecar = read_ugc_sidecar(root / sidecar_path)
    sources = []
    for entry in doc["sources"]:
        sid, category, rel = entry["source_id"], entry["category"], entry["path"]
        clip_path = root / rel
        if not clip_path.is_file():
            raise SourceResolutionError(f"source file missing: {clip_path}")
        width, height, length, _ = read_y4m_header(clip_path)
        labels = None
        if category == "ugc":
            if sid not in sidecar:
                raise AnnotationError(f"{sid}: no sidecar labels in {sidecar_path or '(absent sidecar)'}")
            labels = sidecar[sid]
        sources.append(SourceInfo(sid, category, width, height, length, path=rel, labels=labels))
    return Inventory(sources, root=root)


# ---------------------------------------------------------------------------
# synthetic sources


def natural_clip(width: int, height: int, length: int, seed: int, fps: Fraction = Fraction(25)) -> Clip:
    """Seeded synthetic clip with natural-video statistics.

    Each seed draws its own scene profile: base brightness and contrast, a
    smooth gradient, blob fields at a random spatial scale, fine static
    texture, a per-frame sensor noise floor, global motion, exposure wobble,
    and sometimes a fade-in from near black. The per-source variation keeps a
    corpus of these clips from clustering around one statistical fingerprint.
    Purely deterministic in (geometry, seed).
    """
    rng = make_rng(seed)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    fx, fy = rng.uniform(0.5, 1.5, 2)
    phase = rng.uniform(0, 2 * np.pi)
    base = rng.uniform(60.0, 190.0)
    gradient = rng.uniform(20.0, 70.0) * np.sin(
        2 * np.pi * (fx * xx / width + fy * yy / height) + phase
    )

    cells = int(rng.choice((4, 8, 16)))
    coarse = rng.uniform(-1.0, 1.0, (cells, cells)) * rng.uniform(15.0, 55.0)
    blobs = np.kron(coarse, np.ones((height // cells + 1, width // cells + 1)))[:height, :width]
    for axis in (0, 1):
        for _ in range(2):
            blobs = (blobs + np.roll(blobs, 1, axis) + np.roll(blobs, -1, axis)) / 3.0

    texture = rng.normal(0.0, rng.uniform(2.0, 14.0), (height, width))
    noise_floor = rng.uniform(0.5, 5.0)
    vx = int(rng.integers(0, 5)) * (1 if rng.random() < 0.5 else -1)
    vy = int(rng.integers(0, 5)) * (1 if rng.random() < 0.5 else -1)
    if vx == 0 and vy == 0:
        vx = 1
    wobble = rng.uniform(0.0, 0.2)
    wobble_phase = rng.uniform(0, 2 * np.pi)
    fade_from = rng.uniform(0.15, 0.5) if rng.random() < 0.25 else 1.0
    cu = rng.uniform(0.1, 0.4) * (1 if rng.random() < 0.5 else -1)
    cv = rng.uniform(0.1, 0.4) * (1 if rng.random() < 0.5 else -1)
    still = base + gradient + blobs + texture

    frames = []
    for t in range(length):
        moved = np.roll(np.roll(still, t * vy, axis=0), t * vx, axis=1)
        u01 = t / max(length - 1, 1)
        gain = (fade_from + (1.0 - fade_from) * u01) * (
            1.0 + wobble * np.sin(2 * np.pi * u01 + wobble_phase)
        )
        lit = 16.0 + (moved - 16.0) * gain
        luma = lit + rng.normal(0.0, noise_floor, (height, width))
        luma = np.clip(np.rint(luma), 0, 255).astype(np.uint8)
        moved_c = lit[::2, ::2]
        u = np.clip(np.rint(128.0 + cu * (moved_c - 128.0)), 0, 255).astype(np.uint8)
        v = np.clip(np.rint(128.0 + cv * (moved_c - 128.0)), 0, 255).astype(np.uint8)
        frames.append(Frame(luma, u, v))
    return Clip(tuple(frames), fps)


def _stand_in_geometry(category: str, patch_size: tuple[int, int, int], hfr_len: int) -> tuple[int, int, int]:
    w, h, length = patch_size
    margin = 32
    if category == "hfr":
        return w + margin, h + margin, hfr_len + 8
    return w + margin, h + margin, length + 8


def synthetic_inventory(config) -> Inventory:
    """Planning-only stand-in inventory sized from the pipeline config.

    UGC stand-ins carry all-zero sidecar labels (a synthetic clip has no
    real source artifacts), so plans over this inventory are fully
    self-consistent without any files on disk.
    """
    sources = []
    counts = {"hd": config.n_hd_sources, "hfr": config.n_hfr_sources, "ugc": config.n_ugc_sources}
    for category in SOURCE_CLASSES:
        w, h, length = _stand_in_geometry(category, config.patch_size, config.hfr_len)
        for i in range(counts[category]):
            labels = LabelVector.zeros() if category == "ugc" else None
            sources.append(SourceInfo(f"{category}{i:03d}", category, w, h, length, labels=labels))
    return Inventory(sources)


def write_synthetic_sources(root: Path, config, seed: int) -> Inventory:
    """Materialize a synthetic source directory usable by the executor."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    entries = []
    sidecar_lines = []
    counts = {"hd": config.n_hd_sources, "hfr": config.n_hfr_sources, "ugc": config.n_ugc_sources}
    for category in SOURCE_CLASSES:
        w, h, length = _stand_in_geometry(category, config.patch_size, config.hfr_len)
        for i in range(counts[category]):
            sid = f"{category}{i:03d}"
            rel = f"{sid}.y4m"
            clip = natural_clip(w, h, length, derive_seed(seed, "source", sid))
            write_y4m(clip, root / rel)
            entries.append({"source_id": sid, "category": category, "path": rel})
            if category == "ugc":
                sidecar_lines.append(json.dumps({"source_id": sid, "labels": LabelVector.zeros().bitstring()}))
    doc = {"sources": entries, "ugc_labels": UGC_LABELS_NAME}
    (root / UGC_LABELS_NAME).write_text("\n".join(sidecar_lines) + "\n")
    (root / INVENTORY_NAME).write_text(json.dumps(doc, indent=2) + "\n")
    return build_inventory(root)
