"""Exception types raised across the renderer.

Everything user-facing derives from RaylabError so the CLI can map failures
to exit codes without string matching.
"""

from __future__ import annotations


class RaylabError(Exception):
    """Base class for all renderer errors."""


class SceneFormatError(RaylabError):
    """Scene file rejected: malformed markup, bad values, dangling refs.

    Carries the 1-based line and column of the offending construct when the
    source position is known (expat reports it for every node).
    """

    def __init__(self, message: str, line: int = -1, col: int = -1):
        self.line = line
        self.col = col
        if line >= 0:
            message = f"{message} (line {line}, column {col})"
        super().__init__(message)


class SceneValidationError(RaylabError):
    """Scene is well-formed but semantically unusable (no camera, no emitter)."""


class SceneNotImplementedError(RaylabError):
    """Suite scene is registered with metadata only; no builder exists."""

    def __init__(self, scene_id: str):
        self.scene_id = scene_id
        super().__init__(
            f"scene {scene_id!r} is declared in the suite but has no builder; "
            f"only its capability tags are available"
        )


class UnknownSceneError(RaylabError):
    """Scene id is not in the suite registry at all."""

    def __init__(self, scene_id: str):
        self.scene_id = scene_id
        super().__init__(f"unknown scene id {scene_id!r}")


class CapabilityError(RaylabError):
    """Integrator cannot handle a feature the scene uses."""

    def __init__(self, integrator: str, feature: str):
        self.integrator = integrator
        self.feature = feature
        super().__init__(f"integrator {integrator!r} does not support {feature}")


class MediumNestingError(RaylabError):
    """Medium stack exceeded its depth limit during transport."""

    def __init__(self, limit: int):
        self.limit = limit
        super().__init__(
            f"nested participating media exceeded the supported depth of {limit}"
        )


class EstimatorError(RaylabError):
    """A Monte Carlo estimator hit an invalid sample (non-finite f, zero pdf)."""

    def __init__(self, message: str, sample_index: int, x: float):
        self.sample_index = sample_index
        self.x = x
        super().__init__(f"{message} at sample {sample_index}, x = {x!r}")


class RenderConfigError(RaylabError):
    """Render settings are unusable (zero photon budget, empty bootstrap)."""
