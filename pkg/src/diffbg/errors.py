"""Exception hierarchy; each class maps to a distinct CLI exit code."""


class DiffBGError(Exception):
    exit_code = 1


class ParameterError(DiffBGError, ValueError):
    exit_code = 2


class ShapeError(DiffBGError, ValueError):
    exit_code = 3


class SequenceIOError(DiffBGError, OSError):
    exit_code = 4


class NumericError(DiffBGError, ArithmeticError):
    exit_code = 5
