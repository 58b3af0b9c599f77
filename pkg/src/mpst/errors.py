"""Shared error taxonomy for the toolkit."""


class MPSTError(Exception):
    """Base class for all toolkit errors."""


class ParseError(MPSTError):
    def __init__(self, msg, line=None, col=None):
        self.line = line
        self.col = col
        if line is not None:
            msg = f"{line}:{col}: {msg}"
        super().__init__(msg)


class MergeFailure(MPSTError):
    """Merge (⊔) undefined; carries the label path to the first conflict."""

    def __init__(self, msg, path=()):
        self.path = tuple(path)
        if self.path:
            msg = f"{msg} (at {'/'.join(self.path)})"
        super().__init__(msg)


class NotBasic(MPSTError):
    pass


class NotCompatible(MPSTError):
    pass


class SynthesisFailure(MPSTError):
    pass


class ChoiceOwnership(MPSTError):
    pass


class NotSessionCompatible(MPSTError):
    pass


class ResourceLimit(MPSTError):
    pass
