"""Exception types shared across the toolkit.

Everything raised on purpose derives from ToolkitError so the CLI can map
domain failures to exit code 1 while argparse keeps 2 for usage errors.
"""


class ToolkitError(Exception):
    """Base class for toolkit failures."""


class VideoFormatError(ToolkitError):
    """Malformed or unparseable Y4M data."""


class TruncatedStreamError(VideoFormatError):
    """Y4M frame payload ends before the header geometry says it should."""


class UnsupportedSamplingError(VideoFormatError):
    """Y4M chroma sampling other than 4:2:0."""


class WindowBoundsError(ToolkitError):
    """Patch window does not lie entirely inside the source clip."""


class SynthParameterError(ToolkitError):
    """Artifact parameter incompatible with the input clip or level table."""


class AnnotationError(ToolkitError):
    """Real-source labels missing or inconsistent for a UGC source."""


class SourceResolutionError(ToolkitError):
    """A planned source id cannot be resolved to a clip."""


class PredictionCoverageError(ToolkitError):
    """Predictions do not cover every manifest patch."""

    def __init__(self, missing_ids):
        self.missing_ids = sorted(missing_ids)
        shown = ", ".join(self.missing_ids[:8])
        more = "" if len(self.missing_ids) <= 8 else f" (+{len(self.missing_ids) - 8} more)"
        super().__init__(f"predictions missing for {len(self.missing_ids)} patches: {shown}{more}")


class ParamsLayoutError(ToolkitError):
    """Serialized model parameters disagree with the configured layout."""


class UndefinedMetricError(ToolkitError):
    """Metric has no defined value for the given input (e.g. one-class AUC)."""
