"""Exception types shared across the toolkit.

Errors that signal bad caller input subclass ValueError so plain
``except ValueError`` keeps working for users who do not care which
stage rejected the data.
"""


class AbsfError(Exception):
    """Base class for all toolkit-specific errors."""


class InvalidPoseError(AbsfError, ValueError):
    """Entry pose direction/bend-normal pair is not orthonormal."""


class InvalidModelError(AbsfError, ValueError):
    """Vertebra model is degenerate (bad polygon, corridor, or field)."""


class OutOfFieldError(AbsfError):
    """Query point lies outside the scalar grid hull."""


class FrameError(AbsfError):
    """Plan and model are expressed in incompatible coordinate frames."""


class NoFeasiblePlanError(AbsfError):
    """Solver found no plan meeting the tip-gap tolerance and constraints.

    Carries the best infeasible candidate so callers (CLI, service, UI)
    can still display what the search got closest to.
    """

    def __init__(self, message, best_candidate=None, report=None):
        super().__init__(message)
        self.best_candidate = best_candidate
        self.report = report


class PhaseOrderError(AbsfError):
    """Drilling phase requested out of legal order for the side kind."""


class DegenerateGeometryError(AbsfError, ValueError):
    """Point cloud too degenerate (e.g. collinear) for registration."""


class ChangeoverNotFoundError(AbsfError):
    """No straight-to-curved changeover detected (legal for straight sides)."""


class IllConditionedFitError(AbsfError):
    """Arc span or point count too small for a stable circle fit."""
