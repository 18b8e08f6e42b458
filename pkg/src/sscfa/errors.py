"""Exception hierarchy shared by all analysis components."""


class SscfaError(Exception):
    pass


class SourceError(SscfaError):
    """Error with an attached source position."""

    def __init__(self, msg: str, line: int | None = None, col: int | None = None):
        self.line = line
        self.col = col
        if line is not None:
            msg = f"{line}:{col}: {msg}"
        super().__init__(msg)


class ParseError(SourceError):
    pass


class DesugarError(SourceError):
    pass


class MachineError(SscfaError):
    """Raised by the concrete machine; `run` converts these into Stuck."""


class UnboundVariable(MachineError):
    def __init__(self, var: str):
        self.var = var
        super().__init__(f"unbound variable: {var}")


class DanglingAddress(MachineError):
    """An environment points at an address missing from the store.

    This signals an interpreter bug, not a program error.
    """


class NotAClosure(MachineError):
    def __init__(self, value):
        self.value = value
        super().__init__(f"applied a non-closure value: {value!r}")


class MalformedFrame(SscfaError):
    """A frame's environment does not cover the free variables of its body."""


class MalformedValue(SscfaError):
    """A closure's environment does not cover the free variables of its lambda."""


class ConfigurationError(SscfaError):
    """Invalid analysis configuration (detected at setup, never per step)."""


class ResourceLimit(SscfaError):
    """An analysis exceeded a configured node/edge/step cap.

    Reported distinctly from analysis results: exceeding a cap is a failure
    of the run, never a silent truncation.
    """

    def __init__(self, kind: str, limit: int):
        self.kind = kind
        self.limit = limit
        super().__init__(f"resource limit exceeded: {kind} > {limit}")
