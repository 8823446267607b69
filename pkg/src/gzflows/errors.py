"""Exception types shared across the package."""


class ValidationError(Exception):
    """A domain object failed its validity invariant (rejected input)."""

    def __init__(self, message, violations=None):
        super().__init__(message)
        self.violations = list(violations) if violations is not None else [message]


class ToleranceError(Exception):
    """A numerical defect exceeded its stated tolerance."""

    def __init__(self, message, defect=None, tolerance=None):
        super().__init__(message)
        self.defect = defect
        self.tolerance = tolerance


class InputError(Exception):
    """Malformed request data (bad JSON, missing fields, wrong shapes)."""
