"""Connection coefficients, torsion, and the five covariant-derivative kinds.

The full connection is assembled from the metric jets as

    Gamma^i_jk = (1/2) g^{ia} (g_{ja,k} - g_{jk,a} + g_{ak,j})

with the *symmetric-part inverse* g^{ia}.  The symmetric and antisymmetric
parts of Gamma are computed independently from the corresponding metric
parts through the same formula shape; the full coefficients are stored as
their sum, and the direct full-metric route is kept as a consistency
residual.  First derivatives of Gamma are produced by differentiating the
formula itself (using d g^{-1} = -g^{-1} dg g^{-1}), so curvature never
resorts to finite differencing.

Torsion is twice the antisymmetric part; its covariant components follow by
lowering the upper slot.

Covariant derivatives: the associated kind uses the symmetric part only; the
four non-symmetric kinds differ in whether the derivative index sits in the
second or first slot of Gamma for upper and lower corrections.  Only the
(1,1) case is fixed by the classical displays; the extension to other ranks
applies one correction per slot with the same placement convention, which is
a documented convention of this package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import TensorOpError
from .exprjet import DIM, Expression, evaluate_jet2, parse_expression
from .model import MetricAtPoint
from .tensors import Tensor

KINDS = ("assoc", "1", "2", "3", "4")


def _christoffel_with_grad(part_grad: np.ndarray, part_hess: np.ndarray,
                           ginv: np.ndarray, ginv_grad: np.ndarray,
                           parity: int) -> tuple[np.ndarray, np.ndarray]:
    """Christoffel-shaped combination of one metric part, with d/dx^n.

    ``parity`` is +1 for the symmetric part and -1 for the antisymmetric
    part; the last two slots are mirror-stored so the corresponding
    (anti)symmetry holds bit-exactly rather than to rounding.
    """
    # B[a,j,k] = g_{ja,k} - g_{jk,a} + g_{ak,j}
    b = (np.einsum("jak->ajk", part_grad)
         - np.einsum("jka->ajk", part_grad)
         + np.einsum("akj->ajk", part_grad))
    # dB[a,j,k,n]
    db = (np.einsum("jakn->ajkn", part_hess)
          - np.einsum("jkan->ajkn", part_hess)
          + np.einsum("akjn->ajkn", part_hess))
    gamma = 0.5 * np.einsum("ia,ajk->ijk", ginv, b)
    gamma_grad = 0.5 * (np.einsum("ian,ajk->ijkn", ginv_grad, b)
                        + np.einsum("ia,ajkn->ijkn", ginv, db))
    if parity:
        for j in range(DIM):
            for k in range(j, DIM):
                if parity < 0 and j == k:
                    gamma[:, j, j] = 0.0
                    gamma_grad[:, j, j] = 0.0
                    continue
                gamma[:, k, j] = parity * gamma[:, j, k]
                gamma_grad[:, k, j] = parity * gamma_grad[:, j, k]
    return gamma, gamma_grad


@dataclass(frozen=True)
class ConnectionAtPoint:
    metric: MetricAtPoint
    gamma_full: np.ndarray       # (4,4,4); equals gamma_sym + gamma_anti exactly
    gamma_sym: np.ndarray
    gamma_sym_grad: np.ndarray   # (4,4,4,4) d_n Gamma^i_{jk} of the symmetric part
    gamma_anti: np.ndarray
    gamma_anti_grad: np.ndarray
    first_kind_sym: np.ndarray   # (4,4,4) Gamma_{i.jk} of the symmetric part
    torsion_up: Tensor           # T^i_jk
    torsion_up_grad: np.ndarray  # (4,4,4,4) d_n T^i_jk
    torsion_low: Tensor          # T_ijk
    split_residual: float        # max |direct full-metric route - (sym + anti)|


def generalized_christoffel(m: MetricAtPoint) -> ConnectionAtPoint:
    """Connection of the non-symmetric metric at a point, with torsion."""
    gamma_sym, gamma_sym_grad = _christoffel_with_grad(
        m.sym_grad, m.sym_hess, m.sym_inv, m.sym_inv_grad, parity=+1)
    gamma_anti, gamma_anti_grad = _christoffel_with_grad(
        m.anti_grad, m.anti_hess, m.sym_inv, m.sym_inv_grad, parity=-1)
    gamma_direct, _ = _christoffel_with_grad(
        m.g_grad, m.g_hess, m.sym_inv, m.sym_inv_grad, parity=0)
    gamma_full = gamma_sym + gamma_anti
    split_residual = float(np.max(np.abs(gamma_direct - gamma_full)))

    first_kind = np.einsum("ia,ajk->ijk", m.sym_val, gamma_sym)
    t_up = 2.0 * gamma_anti
    t_up_grad = 2.0 * gamma_anti_grad
    t_low = np.einsum("ia,ajk->ijk", m.sym_val, t_up)
    return ConnectionAtPoint(
        metric=m,
        gamma_full=gamma_full,
        gamma_sym=gamma_sym,
        gamma_sym_grad=gamma_sym_grad,
        gamma_anti=gamma_anti,
        gamma_anti_grad=gamma_anti_grad,
        first_kind_sym=first_kind,
        torsion_up=Tensor(t_up, ("u", "l", "l")),
        torsion_up_grad=t_up_grad,
        torsion_low=Tensor(t_low, ("l", "l", "l")),
        split_residual=split_residual,
    )


def torsion_at(c: ConnectionAtPoint) -> tuple[Tensor, Tensor, np.ndarray]:
    """Torsion tensor (upper and covariant) with its first-derivative jets."""
    return c.torsion_up, c.torsion_low, c.torsion_up_grad


def torsion_covariant_derivative(c: ConnectionAtPoint) -> np.ndarray:
    """Associated-connection covariant derivative DT[i,j,m,n] = T^i_{jm|n}."""
    t = c.torsion_up.data
    tg = c.torsion_up_grad
    gs = c.gamma_sym
    return (tg
            + np.einsum("ian,ajm->ijmn", gs, t)
            - np.einsum("ajn,iam->ijmn", gs, t)
            - np.einsum("amn,ija->ijmn", gs, t))


# ---------------------------------------------------------------------------
# Covariant derivatives of expression-valued tensor fields


@dataclass(frozen=True)
class ExpressionField:
    """Tensor field with expression components, differentiated through jets."""

    components: np.ndarray  # object array of Expression, shape (4,)*rank
    variance: tuple[str, ...]

    @staticmethod
    def parse(components, variance: Sequence[str],
              symbols: Sequence[str]) -> "ExpressionField":
        variance = tuple(variance)
        rank = len(variance)
        arr = np.empty((DIM,) * rank, dtype=object)
        comp = np.asarray(components, dtype=object)
        if comp.shape != arr.shape:
            raise TensorOpError(
                f"component array shape {comp.shape} does not match rank {rank}")
        symset = frozenset(symbols)
        for idx in np.ndindex(arr.shape):
            src = comp[idx]
            arr[idx] = src if isinstance(src, Expression) else \
                parse_expression(str(src), symset)
        return ExpressionField(arr, variance)

    def jets(self, point, params, coords) -> tuple[np.ndarray, np.ndarray]:
        rank = len(self.variance)
        vals = np.zeros((DIM,) * rank)
        grads = np.zeros((DIM,) * rank + (DIM,))
        for idx in np.ndindex(vals.shape):
            jet = evaluate_jet2(self.components[idx], point, params, coords)
            vals[idx] = jet.value
            grads[idx] = jet.grad
        return vals, grads


_LETTERS = "abcd"


def covariant_derivative(field: ExpressionField, kind: str,
                         c: ConnectionAtPoint) -> Tensor:
    """Covariant derivative of a tensor field at the connection's point.

    ``kind`` is one of ``assoc``, ``1``, ``2``, ``3``, ``4``.  The result
    appends one lower slot (the derivative index).  Fields of rank > 4 are
    rejected.
    """
    kind = str(kind)
    if kind not in KINDS:
        raise TensorOpError(f"unknown covariant-derivative kind {kind!r}")
    rank = len(field.variance)
    if rank > 4:
        raise TensorOpError(f"covariant derivative supports rank <= 4, got {rank}")
    m = c.metric
    vals, grads = field.jets(m.point, m.model.params, m.model.coords)
    return Tensor(covariant_derivative_components(vals, grads, field.variance, kind, c),
                  field.variance + ("l",))


def covariant_derivative_components(vals: np.ndarray, grads: np.ndarray,
                                    variance: Sequence[str], kind: str,
                                    c: ConnectionAtPoint) -> np.ndarray:
    """Array form of the covariant derivative given field values and partials."""
    kind = str(kind)
    rank = len(variance)
    gs = c.gamma_sym
    gf = c.gamma_full
    # Gamma placement per kind: (matrix, upper-correction indices, lower-correction
    # indices) where 'i' is the new/old slot index, 'z' the summed index and 'n'
    # the derivative index.
    placements = {
        "assoc": (gs, "izn", "zin"),
        "1": (gf, "izn", "zin"),
        "2": (gf, "inz", "zni"),
        "3": (gf, "izn", "zni"),
        "4": (gf, "inz", "zin"),
    }
    gamma, up_pat, low_pat = placements[kind]
    result = grads.copy()
    letters = _LETTERS[:rank]
    for slot in range(rank):
        s = letters[slot]
        field_letters = letters.replace(s, "z")
        gamma_pat = up_pat.replace("i", s) if variance[slot] == "u" \
            else low_pat.replace("i", s)
        term = np.einsum(f"{gamma_pat},{field_letters}->{letters}n", gamma, vals)
        if variance[slot] == "u":
            result += term
        else:
            result -= term
    return result
