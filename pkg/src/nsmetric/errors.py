"""Exception hierarchy.

Exit-code contract used by the CLI: 1 = file/parse errors, 2 = mathematical
errors (singular metric, evaluation domain, divergence), 3 = two-route
consistency violations.
"""

from __future__ import annotations


class NsmetricError(Exception):
    exit_code = 2


class ModelError(NsmetricError):
    """Malformed model document or expression source."""

    exit_code = 1


class ExpressionSyntaxError(ModelError):
    def __init__(self, message: str, offset: int, expected: frozenset[str]):
        super().__init__(f"{message} at byte offset {offset}; expected one of: "
                         + ", ".join(sorted(expected)))
        self.offset = offset
        self.expected = expected


class UnknownIdentifierError(ModelError):
    def __init__(self, name: str, offset: int):
        super().__init__(f"unknown identifier '{name}' at byte offset {offset}")
        self.name = name
        self.offset = offset


class MathError(NsmetricError):
    exit_code = 2


class SingularMetricError(MathError):
    def __init__(self, det: float, message: str = "symmetric metric part is singular"):
        super().__init__(f"{message} (det={det:.6g})")
        self.det = det


class EvaluationDomainError(MathError):
    """Numeric domain violation, reported with the offending sub-expression."""

    def __init__(self, message: str, subexpression: str):
        super().__init__(f"{message} in sub-expression '{subexpression}'")
        self.subexpression = subexpression


class NonTimelikeFrameError(MathError):
    def __init__(self, norm: float):
        super().__init__(f"frame vector is not timelike (u^a u_a = {norm:.6g} <= 0)")
        self.norm = norm


class RadicandSignError(MathError):
    def __init__(self, t: float, value: float):
        super().__init__(f"profile radicand is negative at t={t:.12g} (value {value:.6g})")
        self.t = t
        self.value = value


class FixedPointDivergenceError(MathError):
    def __init__(self, residual: float, iterations: int):
        super().__init__(f"connection fixed point did not converge after "
                         f"{iterations} iterations (residual {residual:.3e})")
        self.residual = residual
        self.iterations = iterations


class TensorOpError(MathError):
    """Variance mismatch or slot out of range in a tensor operation."""


class ConsistencyError(NsmetricError):
    """Two independently computed routes disagree beyond tolerance."""

    exit_code = 3

    def __init__(self, message: str, breakdown: dict | None = None):
        super().__init__(message)
        self.breakdown = dict(breakdown or {})
