"""Dense dimension-4 tensors with index variance, contraction and raising/lowering.

Storage is a plain dense ndarray of shape (4,)*rank; rank is capped at 5
(4^5 = 1024 entries), so there is no sparse representation.  Every operation
is pure and returns a new value.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularMetricError, TensorOpError

DIM = 4
MAX_RANK = 5

UP = "u"
DOWN = "l"

# Determinant threshold is scaled by the matrix magnitude so that models in
# units far from 1 are not misclassified.
_SINGULAR_RTOL = 1e-14


@dataclass(frozen=True)
class Tensor:
    data: np.ndarray
    variance: tuple[str, ...]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "variance", tuple(self.variance))
        if len(self.variance) > MAX_RANK:
            raise TensorOpError(f"rank {len(self.variance)} exceeds maximum {MAX_RANK}")
        if any(v not in (UP, DOWN) for v in self.variance):
            raise TensorOpError(f"bad variance {self.variance!r}; use 'u'/'l'")
        if data.shape != (DIM,) * len(self.variance):
            raise TensorOpError(
                f"data shape {data.shape} does not match rank {len(self.variance)}")

    @property
    def rank(self) -> int:
        return len(self.variance)

    def __getitem__(self, idx):
        return self.data[idx]

    @staticmethod
    def scalar(value: float) -> "Tensor":
        return Tensor(np.asarray(float(value)), ())


def contract(t: Tensor, slot_a: int, slot_b: int) -> Tensor:
    """Sum over a paired upper/lower slot, dropping both."""
    r = t.rank
    if not (0 <= slot_a < r and 0 <= slot_b < r) or slot_a == slot_b:
        raise TensorOpError(f"contraction slots ({slot_a}, {slot_b}) out of range for rank {r}")
    if {t.variance[slot_a], t.variance[slot_b]} != {UP, DOWN}:
        raise TensorOpError(
            f"contraction needs one upper and one lower slot, got "
            f"{t.variance[slot_a]!r} and {t.variance[slot_b]!r}")
    data = np.trace(t.data, axis1=slot_a, axis2=slot_b)
    variance = tuple(v for k, v in enumerate(t.variance) if k not in (slot_a, slot_b))
    return Tensor(np.asarray(data, dtype=float), variance)


def invert_sym4(m: np.ndarray) -> tuple[np.ndarray, float]:
    """Inverse and determinant of a symmetric 4x4 matrix.

    Raises :class:`SingularMetricError` when |det| falls below the
    magnitude-scaled threshold.
    """
    m = np.asarray(m, dtype=float)
    if m.shape != (DIM, DIM):
        raise TensorOpError(f"expected a 4x4 matrix, got shape {m.shape}")
    det = float(np.linalg.det(m))
    scale = float(np.max(np.abs(m)))
    if scale == 0.0 or abs(det) < _SINGULAR_RTOL * scale**4:
        raise SingularMetricError(det)
    inv = np.linalg.inv(m)
    inv = 0.5 * (inv + inv.T)  # exact symmetry of the returned inverse
    return inv, det


@dataclass(frozen=True)
class SymMetricAtPoint:
    """Symmetric metric part at a point: lower components, inverse and determinant."""

    lower: np.ndarray
    upper: np.ndarray
    det: float

    @staticmethod
    def from_lower(lower: np.ndarray) -> "SymMetricAtPoint":
        upper, det = invert_sym4(lower)
        return SymMetricAtPoint(np.asarray(lower, dtype=float), upper, det)


def raise_lower(t: Tensor, slot: int, m: SymMetricAtPoint, direction: str) -> Tensor:
    """Raise or lower one slot against the symmetric metric part.

    ``direction`` is ``'up'`` or ``'down'``; the slot must currently carry the
    opposite variance.  Raising then lowering the same slot is the identity up
    to rounding.
    """
    if direction not in ("up", "down"):
        raise TensorOpError(f"direction must be 'up' or 'down', got {direction!r}")
    if not 0 <= slot < t.rank:
        raise TensorOpError(f"slot {slot} out of range for rank {t.rank}")
    want = DOWN if direction == "up" else UP
    if t.variance[slot] != want:
        raise TensorOpError(
            f"cannot move slot {slot} {direction}: variance is {t.variance[slot]!r}")
    g = m.upper if direction == "up" else m.lower
    data = np.tensordot(g, t.data, axes=([1], [slot]))
    data = np.moveaxis(data, 0, slot)
    variance = list(t.variance)
    variance[slot] = UP if direction == "up" else DOWN
    return Tensor(data, tuple(variance))
