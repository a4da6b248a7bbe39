class GroupShiftError(Exception):
    pass


class SpecError(GroupShiftError):
    """Malformed or inconsistent input document or argument."""


class UnknownGenerator(SpecError):
    pass


class SupportMismatch(SpecError):
    pass


class EmbeddingNotInjective(SpecError):
    pass


class CosetCheckFailed(SpecError):
    pass


class MemoryTooSmall(SpecError):
    pass


class PatternNotInTable(SpecError):
    pass


class InvalidCoreSet(SpecError):
    pass


class OracleError(SpecError):
    pass


class NoCompletion(SpecError):
    def __init__(self, message: str, witness: object = None) -> None:
        super().__init__(message)
        self.witness = witness


class ResourceLimit(GroupShiftError):
    pass


class NonConvergence(GroupShiftError):
    pass


class InsufficientDataError(GroupShiftError):
    pass
