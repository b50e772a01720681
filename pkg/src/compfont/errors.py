"""Exception types shared across the toolkit.

Every exception carries a short machine-readable ``code`` (the class name)
so command-line front ends can print ``error: <code>: <message>``.
"""


class CompfontError(Exception):
    """Base class for all toolkit errors."""

    @property
    def code(self):
        return type(self).__name__


class CharacterOutOfRange(CompfontError, ValueError):
    pass


class MalformedCluster(CompfontError, ValueError):
    pass


class LabelOutOfRange(CompfontError, ValueError):
    pass


class CoverageImpossible(CompfontError, ValueError):
    def __init__(self, message, uncovered=()):
        super().__init__(message)
        self.uncovered = tuple(uncovered)


class EmptyFont(CompfontError, ValueError):
    pass


class UnreadableImage(CompfontError, OSError):
    def __init__(self, path, reason=""):
        super().__init__(f"cannot read image {path}" + (f": {reason}" if reason else ""))
        self.path = path


class ShapeMismatch(CompfontError, ValueError):
    pass


class MissingComponent(CompfontError, KeyError):
    def __init__(self, component, style, name=None):
        self.component = component
        self.style = style
        self.name = name
        super().__init__(component, style)

    def __str__(self):
        shown = f"{self.name!r} " if self.name is not None else ""
        return (f"component {shown}(type {self.component[0]}, index {self.component[1]}) "
                f"missing from dynamic memory for style {self.style!r}")


class NonFiniteLoss(CompfontError, FloatingPointError):
    def __init__(self, term, value):
        super().__init__(f"loss term {term!r} is not finite ({value})")
        self.term = term


class InsufficientAccuracy(CompfontError, RuntimeError):
    pass


class ConfigMismatch(CompfontError, ValueError):
    pass
