"""Exception types shared across the package."""


class ModelError(ValueError):
    """A model description or parameter set violates a structural invariant.

    ``problems`` lists every violated invariant found, not only the first.
    """

    def __init__(self, problems):
        if isinstance(problems, str):
            problems = [problems]
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class IdentificationError(Exception):
    """An identification procedure hit an exceptional (non-generic) input.

    ``check`` names the violated precondition, ``witness`` carries the
    offending value when there is one.
    """

    def __init__(self, check, message="", witness=None):
        self.check = check
        self.witness = witness
        text = check if not message else f"{check}: {message}"
        super().__init__(text)


class IrrationalResultError(IdentificationError):
    """Rational mode was asked for a quantity that is not rational."""

    def __init__(self, message="", witness=None):
        super().__init__("rational spectrum", message, witness)
