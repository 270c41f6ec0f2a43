"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed or degenerate input (bad polygon, bad parameter range)."""


class DegenerateDirectionError(InputError):
    """A direction vector could not be formed (zero-length separation)."""


class NumericalError(ArithmeticError):
    """A criterion evaluated to a non-finite value."""


class ProtocolError(RuntimeError):
    """A contribution or command referenced an unknown agent or wrong tick."""


class ScenarioError(ValueError):
    """Scenario file rejected; carries every validation error found."""

    def __init__(self, errors: list[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))
