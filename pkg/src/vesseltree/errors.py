"""Exception types shared across the package."""


class VesselTreeError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(VesselTreeError):
    """Invalid input data or parameters. The message names the offending field."""


class PipelineError(VesselTreeError):
    """A segmentation stage failed. Carries the stage letter (d)-(i)."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"stage ({stage}): {message}")
        self.stage = stage
