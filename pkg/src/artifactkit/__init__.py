"""artifactkit: streaming-video artifact synthesis, labeled dataset
generation, a reference detector forward pass, loss references, and an
evaluation harness with self-verifying AUC."""

from .errors import ToolkitError
from .labels import LabelVector
from .synth import ArtifactKind, ArtifactSpec, IntensityLevel
from .video import Clip, Frame, PatchWindow

__version__ = "0.1.0"

__all__ = [
    "ToolkitError",
    "LabelVector",
    "ArtifactKind",
    "ArtifactSpec",
    "IntensityLevel",
    "Clip",
    "Frame",
    "PatchWindow",
    "__version__",
]
