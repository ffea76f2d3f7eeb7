"""Exception types shared across the solver; each carries a CLI exit code."""


class SlabError(Exception):
    exit_code = 1


class SchemaError(SlabError, ValueError):
    exit_code = 2


class InvalidBoundary(SlabError, ValueError):
    exit_code = 3


class NonTimelikeFlow(SlabError, ArithmeticError):
    """A four-flow that should be future-timelike is not (usually a grid that is too coarse)."""

    exit_code = 3


class DegenerateFlow(NonTimelikeFlow):
    pass


class NoSolution(SlabError, ArithmeticError):
    exit_code = 3


class OutputError(SlabError, OSError):
    exit_code = 5
