"""Exception hierarchy shared across the package."""


class ScenarioError(Exception):
    """Base class for anything wrong with a scenario definition."""


class ScenarioParseError(ScenarioError):
    """Scenario file is malformed or has unusable field types."""


class ScenarioShapeError(ScenarioError):
    """A matrix has the wrong shape for the declared dimensions."""


class AssumptionError(ScenarioError):
    """A positive-(semi)definiteness assumption fails at some time step."""


class SynthesisError(Exception):
    """Backward recursion hit a numerically singular inner matrix."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t


class SimulationBlowupError(RuntimeError):
    """A simulated state became non-finite."""

    def __init__(self, message, t=None):
        super().__init__(message)
        self.t = t
