"""Generalized space with independently supplied covariant torsion.

Here the torsion is not derived from the metric: the model supplies covariant
components directly (antisymmetric in the last two indices), and the
connection of the space is

    Gt_ijk = G_i(jk) + (1/2)[Tt_jki + Tt_ijk - Tt_kij] - (1/2)[nm terms]

where the "nm" (non-metricity) terms are first covariant derivatives of the
symmetric metric with respect to the connection being defined.  That makes
the definition implicit; two explicit readings are shipped:

* ``assume_zero`` (default): the non-metricity terms vanish, so the
  correction tensor is built from the supplied torsion alone;
* ``fixed_point``: start from the Levi-Civita coefficients, evaluate the
  non-metricity terms with the current iterate, rebuild, and repeat until
  the coefficients stop moving.

Either way the symmetric part satisfies  Gt_sym = G_LC - (1/2) eta  for the
correction tensor eta, whose symmetry in its lower pair is an identity of
the construction.  Curvature is computed both directly from Gt and through
the eta-decomposition of the base curvature; the two routes must agree.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .connection import ConnectionAtPoint, generalized_christoffel
from .curvature import CurvatureAtPoint
from .errors import ConsistencyError, FixedPointDivergenceError, ModelError
from .exprjet import DIM, evaluate_jet2
from .matter import (FrameAtPoint, MatterReport, _assemble_report,
                     frame_for_model)
from .model import CoeffSet, MetricAtPoint, SpacetimeModel, metric_at
from .tensors import Tensor

FIXED_POINT_TOL = 1e-12
FIXED_POINT_MAX_ITER = 100

#: toggleable correction blocks of the printed curvature-family display
K_BLOCKS = ("eta", "family_derivative", "family_quadratic",
            "u_upper", "u_lower", "u1_upper", "u1_lower", "shared_lower")


@dataclass(frozen=True)
class IzConnectionAtPoint:
    metric: MetricAtPoint
    base: ConnectionAtPoint       # connection of the host model's metric
    mode: str
    torsion_low: Tensor           # Tt_ijk as supplied
    torsion_low_grad: np.ndarray
    torsion_up: Tensor            # Tt^i_jk
    torsion_up_grad: np.ndarray
    eta: Tensor                   # eta^i_jk
    eta_grad: np.ndarray
    gamma_sym: np.ndarray         # Gt^i_(jk)
    gamma_sym_grad: np.ndarray
    nonmetricity: np.ndarray      # [a,b,c] = g_ab 1|c under the full Gt
    iterations: int


def _torsion_from_spec(model: SpacetimeModel, point) -> tuple[np.ndarray, np.ndarray]:
    spec = model.iz
    if spec is None:
        raise ModelError("model declares no [iz] section")
    low = np.zeros((DIM,) * 3)
    grad = np.zeros((DIM,) * 3 + (DIM,))
    seen = np.zeros((DIM,) * 3, dtype=bool)
    for (i, j, k), expr in spec.torsion.items():
        jet = evaluate_jet2(expr, point, model.params, model.coords)
        low[i, j, k] = jet.value
        grad[i, j, k] = jet.grad
        seen[i, j, k] = True
    for (i, j, k) in zip(*np.nonzero(seen)):
        if not seen[i, k, j]:
            low[i, k, j] = -low[i, j, k]
            grad[i, k, j] = -grad[i, j, k]
        else:
            if abs(low[i, k, j] + low[i, j, k]) > 1e-12 * max(
                    1.0, abs(low[i, j, k])):
                raise ModelError(
                    f"[iz] torsion not antisymmetric in last index pair at "
                    f"component ({i},{j},{k})")
    return low, grad


def iz_connection_at(model: SpacetimeModel, point: Sequence[float],
                     mode: str | None = None) -> IzConnectionAtPoint:
    """Connection of the supplied-torsion space at a point."""
    m = metric_at(model, point)
    base = generalized_christoffel(m)
    spec_mode = model.iz.metricity_mode if model.iz is not None else "assume_zero"
    mode = mode or spec_mode
    t_low, t_low_grad = _torsion_from_spec(model, m.point)

    gi = m.sym_inv
    gig = m.sym_inv_grad
    t_up = np.einsum("ia,ajk->ijk", gi, t_low)
    t_up_grad = (np.einsum("ian,ajk->ijkn", gig, t_low)
                 + np.einsum("ia,ajkn->ijkn", gi, t_low_grad))

    # torsion-only part of the eta bracket: B[a,j,k] = Tt_jak + Tt_kaj
    bracket = (np.einsum("jak->ajk", t_low) + np.einsum("kaj->ajk", t_low))
    bracket_grad = (np.einsum("jakn->ajkn", t_low_grad)
                    + np.einsum("kajn->ajkn", t_low_grad))

    if mode == "assume_zero":
        nm = np.zeros((DIM,) * 3)
        eta = np.einsum("ia,ajk->ijk", gi, bracket)
        eta_grad = (np.einsum("ian,ajk->ijkn", gig, bracket)
                    + np.einsum("ia,ajkn->ijkn", gi, bracket_grad))
        gamma_sym = base.gamma_sym - 0.5 * eta
        gamma_sym_grad = base.gamma_sym_grad - 0.5 * eta_grad
        iterations = 0
    elif mode == "fixed_point":
        gamma_sym = base.gamma_sym.copy()
        gamma_sym_grad = base.gamma_sym_grad.copy()
        s_val, s_grad, s_hess = m.sym_val, m.sym_grad, m.sym_hess
        nm = np.zeros((DIM,) * 3)
        eta = np.zeros((DIM,) * 3)
        eta_grad = np.zeros((DIM,) * 4)
        iterations = 0
        residual = np.inf
        for iterations in range(1, FIXED_POINT_MAX_ITER + 1):
            gamma_full = gamma_sym + 0.5 * t_up
            gamma_full_grad = gamma_sym_grad + 0.5 * t_up_grad
            nm = (s_grad
                  - np.einsum("zac,zb->abc", gamma_full, s_val)
                  - np.einsum("zbc,az->abc", gamma_full, s_val))
            nm_grad = (s_hess
                       - np.einsum("zacn,zb->abcn", gamma_full_grad, s_val)
                       - np.einsum("zac,zbn->abcn", gamma_full, s_grad)
                       - np.einsum("zbcn,az->abcn", gamma_full_grad, s_val)
                       - np.einsum("zbc,azn->abcn", gamma_full, s_grad))
            full_bracket = (bracket
                            + np.einsum("kaj->ajk", nm)
                            + np.einsum("ajk->ajk", nm)
                            - np.einsum("kja->ajk", nm))
            full_bracket_grad = (bracket_grad
                                 + np.einsum("kajn->ajkn", nm_grad)
                                 + np.einsum("ajkn->ajkn", nm_grad)
                                 - np.einsum("kjan->ajkn", nm_grad))
            eta = np.einsum("ia,ajk->ijk", gi, full_bracket)
            eta_grad = (np.einsum("ian,ajk->ijkn", gig, full_bracket)
                        + np.einsum("ia,ajkn->ijkn", gi, full_bracket_grad))
            new_sym = base.gamma_sym - 0.5 * eta
            new_sym_grad = base.gamma_sym_grad - 0.5 * eta_grad
            residual = float(np.max(np.abs(new_sym - gamma_sym)))
            gamma_sym = new_sym
            gamma_sym_grad = new_sym_grad
            if residual < FIXED_POINT_TOL:
                break
        else:
            raise FixedPointDivergenceError(residual, FIXED_POINT_MAX_ITER)
    else:
        raise ModelError(f"unknown metricity mode {mode!r}")

    return IzConnectionAtPoint(
        metric=m, base=base, mode=mode,
        torsion_low=Tensor(t_low, ("l", "l", "l")), torsion_low_grad=t_low_grad,
        torsion_up=Tensor(t_up, ("u", "l", "l")), torsion_up_grad=t_up_grad,
        eta=Tensor(eta, ("u", "l", "l")), eta_grad=eta_grad,
        gamma_sym=gamma_sym, gamma_sym_grad=gamma_sym_grad,
        nonmetricity=nm, iterations=iterations,
    )


def _assoc_cov_deriv_12(vals: np.ndarray, grads: np.ndarray,
                        gamma: np.ndarray) -> np.ndarray:
    """Covariant derivative of a (1,2) field: out[i,j,m,n] = v^i_{jm;n}."""
    return (grads
            + np.einsum("ian,ajm->ijmn", gamma, vals)
            - np.einsum("ajn,iam->ijmn", gamma, vals)
            - np.einsum("amn,ija->ijmn", gamma, vals))


def _curvature_tensor(gamma: np.ndarray, gamma_grad: np.ndarray) -> np.ndarray:
    return (gamma_grad
            - np.einsum("ijnm->ijmn", gamma_grad)
            + np.einsum("ajm,ian->ijmn", gamma, gamma)
            - np.einsum("ajn,iam->ijmn", gamma, gamma))


@dataclass(frozen=True)
class IzCurvatureAtPoint:
    r_tilde: Tensor            # curvature of the modified symmetric part
    r_tilde_decomposed: Tensor  # same tensor via the eta-decomposition
    k_full: Tensor             # printed family display (selected blocks)
    k_ricci: Tensor
    k_scalar: float            # contraction route
    k_scalar_closed: float     # printed scalar display
    l_tilde_m: float           # k_scalar_closed minus the base scalar
    diagnostics: dict[str, float]

    def check(self, tol: float = 1e-9):
        worst = max(self.diagnostics["r_route_delta"],
                    self.diagnostics["scalar_route_delta"])
        if worst > tol:
            raise ConsistencyError(
                f"supplied-torsion curvature routes disagree by {worst:.3e}",
                dict(self.diagnostics))


def iz_curvature_at(conn: IzConnectionAtPoint, base_cur: CurvatureAtPoint,
                    coeffs: CoeffSet,
                    blocks: Sequence[str] | None = None,
                    printed_index_order: bool = True,
                    check_tol: float | None = None) -> IzCurvatureAtPoint:
    """Curvature family and matter scalar of the supplied-torsion space.

    ``blocks`` selects correction blocks of the printed family display (all
    by default); ``printed_index_order=False`` flips the ambiguous
    lower-correction index pair to the alternate reading.
    """
    enabled = set(K_BLOCKS if blocks is None else blocks)
    unknown = enabled - set(K_BLOCKS)
    if unknown:
        raise ValueError(f"unknown curvature blocks: {sorted(unknown)}")

    m = conn.metric
    gi = m.sym_inv
    eta = conn.eta.data
    t_up = conn.torsion_up.data
    gamma_lc = conn.base.gamma_sym
    u, u1, v, v1, w = coeffs.u, coeffs.u1, coeffs.v, coeffs.v1, coeffs.w

    r_direct = _curvature_tensor(conn.gamma_sym, conn.gamma_sym_grad)
    d_eta = _assoc_cov_deriv_12(eta, conn.eta_grad, gamma_lc)
    eta_quad = (np.einsum("ajm,ian->ijmn", eta, eta)
                - np.einsum("ajn,iam->ijmn", eta, eta))
    r_decomposed = (base_cur.riemann.data
                    - 0.5 * d_eta
                    + 0.5 * np.einsum("ijnm->ijmn", d_eta)
                    + 0.25 * eta_quad)

    d_t = _assoc_cov_deriv_12(t_up, conn.torsion_up_grad, gamma_lc)

    k = base_cur.riemann.data.copy()
    if "eta" in enabled:
        k = k - 0.5 * d_eta + 0.5 * np.einsum("ijnm->ijmn", d_eta) + 0.25 * eta_quad
    if "family_derivative" in enabled:
        k = k + u * d_t + u1 * np.einsum("ijnm->ijmn", d_t)
    if "family_quadratic" in enabled:
        k = (k + v * np.einsum("ajm,ian->ijmn", t_up, t_up)
             + v1 * np.einsum("ajn,iam->ijmn", t_up, t_up)
             + w * np.einsum("amn,iaj->ijmn", t_up, t_up))
    lower_pat = "imb" if printed_index_order else "ibm"
    lower_pat_n = "inb" if printed_index_order else "ibn"
    if "u_upper" in enabled:
        k = k - 0.5 * u * np.einsum("ibn,bjm->ijmn", eta, t_up)
    if "u_lower" in enabled:
        k = k - 0.5 * u * np.einsum(f"bjn,{lower_pat}->ijmn", eta, t_up)
    if "u1_upper" in enabled:
        k = k - 0.5 * u1 * np.einsum("ibm,bjn->ijmn", eta, t_up)
    if "u1_lower" in enabled:
        k = k - 0.5 * u1 * np.einsum(f"bjm,{lower_pat_n}->ijmn", eta, t_up)
    if "shared_lower" in enabled:
        k = k + 0.5 * (u + u1) * np.einsum("bmn,ijb->ijmn", eta, t_up)

    k_ricci = np.einsum("aija->ij", k)
    k_scalar = float(np.einsum("ij,ij->", gi, k_ricci))

    eta_trace = np.einsum("aia->i", eta)        # eta^b_{ab}
    t_trace = np.einsum("aia->i", t_up)         # Tt^g_{bg}
    scalar_closed = (
        base_cur.scalar
        - 0.5 * float(np.einsum("bg,abga->", gi, d_eta))
        + 0.5 * float(np.einsum("bg,aabg->", gi, d_eta))
        + 0.25 * float(np.einsum("gd,agd,a->", gi, eta, eta_trace))
        - 0.25 * float(np.einsum("gd,abg,bad->", gi, eta, eta))
        - (v1 + w) * float(np.einsum("gd,agb,bda->", gi, t_up, t_up))
        + u1 * float(np.einsum("bg,abag->", gi, d_t))
        + 0.5 * u1 * float(np.einsum("de,bde,b->", gi, eta, t_trace))
    )
    l_tilde_m = scalar_closed - base_cur.scalar

    diagnostics = {
        "r_route_delta": float(np.max(np.abs(r_direct - r_decomposed))),
        "scalar_route_delta": abs(k_scalar - scalar_closed),
        "eta_symmetry_delta": float(np.max(np.abs(eta - np.einsum("ikj->ijk", eta)))),
        "gamma_identity_delta": float(np.max(np.abs(
            conn.gamma_sym - (gamma_lc - 0.5 * eta)))),
        "nonmetricity_max": float(np.max(np.abs(conn.nonmetricity))),
    }
    result = IzCurvatureAtPoint(
        r_tilde=Tensor(r_direct, ("u", "l", "l", "l")),
        r_tilde_decomposed=Tensor(r_decomposed, ("u", "l", "l", "l")),
        k_full=Tensor(k, ("u", "l", "l", "l")),
        k_ricci=Tensor(k_ricci, ("l", "l")),
        k_scalar=k_scalar,
        k_scalar_closed=scalar_closed,
        l_tilde_m=l_tilde_m,
        diagnostics=diagnostics,
    )
    if check_tol is not None:
        result.check(check_tol)
    return result


def iz_variation_tensor(model: SpacetimeModel, m: MetricAtPoint) -> Tensor:
    """User-supplied variation tensor of the matter scalar (zero by default)."""
    v = np.zeros((DIM, DIM))
    if model.iz is not None:
        from .exprjet import evaluate_value
        for (i, j), expr in model.iz.variation.items():
            v[i, j] = evaluate_value(expr, m.point, model.params, model.coords)
    return Tensor(v, ("l", "l"))


def iz_emt_at(conn: IzConnectionAtPoint, base_cur: CurvatureAtPoint,
              coeffs: CoeffSet, v_tilde: Tensor | np.ndarray | None,
              m: MetricAtPoint, lam: float = 0.0,
              frame: FrameAtPoint | None = None) -> MatterReport:
    """Energy-momentum report: T_ij = -V_ij + (1/2) g_ij L, Madsen extraction."""
    if frame is None:
        frame = frame_for_model(m)
    cur_iz = iz_curvature_at(conn, base_cur, coeffs)
    v = (np.zeros((DIM, DIM)) if v_tilde is None
         else (v_tilde.data if isinstance(v_tilde, Tensor) else np.asarray(v_tilde)))
    t_data = -v + 0.5 * cur_iz.l_tilde_m * m.sym_val
    return _assemble_report(t_data, base_cur, m, frame, lam,
                            {"l_tilde_m": cur_iz.l_tilde_m})
