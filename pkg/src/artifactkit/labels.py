"""Ten-bit binary label vectors in the canonical artifact order."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

from .errors import AnnotationError
from .synth import ArtifactKind


@dataclass(frozen=True)
class LabelVector:
    """One flag per ArtifactKind; flag j is 1 iff artifact j is present."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if len(self.bits) != len(ArtifactKind):
            raise AnnotationError(f"label vector needs {len(ArtifactKind)} bits, got {len(self.bits)}")
        if any(b not in (0, 1) for b in self.bits):
            raise AnnotationError(f"label bits must be 0/1, got {self.bits}")

    @classmethod
    def zeros(cls) -> "LabelVector":
        return cls((0,) * len(ArtifactKind))

    @classmethod
    def from_kinds(cls, kinds: Iterable[ArtifactKind]) -> "LabelVector":
        present = set(kinds)
        return cls(tuple(1 if k in present else 0 for k in ArtifactKind))

    @classmethod
    def from_bitstring(cls, text: str) -> "LabelVector":
        if len(text) != len(ArtifactKind) or set(text) - {"0", "1"}:
            raise AnnotationError(f"bad label bitstring {text!r}")
        return cls(tuple(int(c) for c in text))

    def bitstring(self) -> str:
        return "".join(str(b) for b in self.bits)

    def __getitem__(self, kind: ArtifactKind | int) -> int:
        return self.bits[int(kind)]

    def merged_with(self, other: "LabelVector") -> "LabelVector":
        return LabelVector(tuple(a | b for a, b in zip(self.bits, other.bits)))

    def kinds(self) -> tuple[ArtifactKind, ...]:
        return tuple(k for k in ArtifactKind if self.bits[int(k)])
