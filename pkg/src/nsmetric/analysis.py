"""Per-point analysis reports: every quantity the engine computes, in one dict.

The report layout is documented in ``docs/report_schema.md``; values are
plain Python floats/lists so ``json.dumps`` round-trips them bit-exactly.
Two-route diagnostic data is always included, not only on failure.
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .connection import generalized_christoffel
from .curvature import curvature_family_at, riemann_at
from .errors import ConsistencyError
from .izspace import iz_connection_at, iz_curvature_at, iz_emt_at, iz_variation_tensor
from .matter import (FrameAtPoint, comoving_frame, combine_matter_fields,
                     eisenhart_matter_lagrangian, emt_family, eom_residual,
                     evaluate_matter_terms, frame_for_model, frame_from_expressions)
from .model import CoeffSet, SpacetimeModel, metric_at, model_summary

NONZERO_EPS = 1e-12


def _nonzero(arr: np.ndarray) -> list[list]:
    out = []
    for idx in np.ndindex(arr.shape):
        v = float(arr[idx])
        if abs(v) > NONZERO_EPS:
            out.append([*map(int, idx), v])
    return out


def _mat(arr: np.ndarray) -> list[list[float]]:
    return [[float(v) for v in row] for row in np.asarray(arr)]


def resolve_frame(model: SpacetimeModel, m, frame_spec) -> FrameAtPoint:
    if frame_spec is None or frame_spec == "model":
        return frame_for_model(m)
    if frame_spec == "comoving":
        return comoving_frame(m)
    if isinstance(frame_spec, FrameAtPoint):
        return frame_spec
    from .exprjet import parse_expression
    exprs = [parse_expression(e, model.symbols) if isinstance(e, str) else e
             for e in frame_spec]
    return frame_from_expressions(exprs, m)


def analyze_point(model: SpacetimeModel, point: Sequence[float], *,
                  coeffs: CoeffSet | None = None, lam: float = 0.0,
                  frame=None, tol: float = 1e-8,
                  raise_on_violation: bool = True) -> dict:
    """Full per-point report.

    ``tol`` bounds the unattributed two-route residuals; beyond it a
    :class:`ConsistencyError` is raised (when ``raise_on_violation``) after
    the report is assembled, so callers can still inspect the data.
    """
    coeffs = coeffs if coeffs is not None else model.coeffs
    m = metric_at(model, point)
    c = generalized_christoffel(m)
    cur = riemann_at(c)
    fam = curvature_family_at(c, cur, m, coeffs, check_tol=None)
    fr = resolve_frame(model, m, frame)

    v_hat = model.variation
    tm = eisenhart_matter_lagrangian(c, m, coeffs, v_hat)
    matter = emt_family(c, m, coeffs, v_hat, lam, fr)
    eom = eom_residual(matter.t_low, cur, m, lam)

    report: dict = {
        "model": model_summary(model) | {
            "point": [float(v) for v in m.point],
            "lambda": float(lam),
            "coefficients_used": coeffs.as_dict(),
        },
        "metric": {
            "g": _mat(m.g_val),
            "sym": _mat(m.sym_val),
            "antisym": _mat(m.anti_val),
            "inverse_sym": _mat(m.sym_inv),
            "det": float(m.det),
        },
        "connection": {
            "full_nonzero": _nonzero(c.gamma_full),
            "sym_nonzero": _nonzero(c.gamma_sym),
            "antisym_nonzero": _nonzero(c.gamma_anti),
            "first_kind_nonzero": _nonzero(c.first_kind_sym),
            "split_residual": float(c.split_residual),
        },
        "torsion": {
            "upper_nonzero": _nonzero(c.torsion_up.data),
            "lower_nonzero": _nonzero(c.torsion_low.data),
        },
        "curvature": {
            "ricci": _mat(cur.ricci.data),
            "scalar": float(cur.scalar),
            "riemann_nonzero": _nonzero(cur.riemann.data),
        },
        "family": {
            "coefficients": coeffs.as_dict(),
            "ricci_contracted": _mat(fam.ricci.data),
            "ricci_closed": _mat(fam.ricci_closed.data),
            "scalar": float(fam.scalar),
            "scalar_contracted": float(fam.scalar_contracted),
            "torsion_contraction": float(fam.torsion_contraction),
            "diagnostics": {k: float(v) for k, v in fam.diagnostics.items()},
        },
        "matter": {
            "lagrangian": float(tm.lagrangian),
            "contraction": float(tm.contraction),
            "tau": _mat(tm.tau.data),
            "tau_single_slot": _mat(tm.tau_single_slot.data),
            "w_tensor": _mat(tm.w_tensor.data),
            "emt": _mat(matter.t_low.data),
            "trace": float(matter.trace),
            "pressure": float(matter.p),
            "density": float(matter.rho),
            "omega": None if matter.omega is None else float(matter.omega),
            "p_eqm_residual": float(matter.p_eqm_residual),
            "rho_eqm_residual": float(matter.rho_eqm_residual),
            "eom_residual_max": float(np.max(np.abs(eom.data))),
            "lambda": float(lam),
        },
        "frame": {
            "u_up": [float(v) for v in fr.u_up],
            "u_low": [float(v) for v in fr.u_low],
        },
    }

    if model.matter_terms:
        terms = evaluate_matter_terms(model, m)
        combined = combine_matter_fields(terms, m, cur, fr, lam)
        report["matter_terms"] = {
            "labels": [t.label for t in terms],
            "alphas": [float(t.alpha) for t in terms],
            "emt": _mat(combined.t_low.data),
            "trace": float(combined.trace),
            "pressure": float(combined.p),
            "density": float(combined.rho),
            "omega": None if combined.omega is None else float(combined.omega),
        }

    if model.iz is not None:
        conn = iz_connection_at(model, point)
        izc = iz_curvature_at(conn, cur, coeffs)
        izrep = iz_emt_at(conn, cur, coeffs, iz_variation_tensor(model, m), m, lam, fr)
        report["iz"] = {
            "metricity_mode": conn.mode,
            "fixed_point_iterations": int(conn.iterations),
            "eta_nonzero": _nonzero(conn.eta.data),
            "nonmetricity_max": float(np.max(np.abs(conn.nonmetricity))),
            "r_tilde_ricci": _mat(np.einsum("aija->ij", izc.r_tilde.data)),
            "k_scalar": float(izc.k_scalar),
            "k_scalar_closed": float(izc.k_scalar_closed),
            "l_tilde_m": float(izc.l_tilde_m),
            "l_m_difference": float(izc.l_tilde_m - tm.lagrangian),
            "emt": _mat(izrep.t_low.data),
            "pressure": float(izrep.p),
            "density": float(izrep.rho),
            "omega": None if izrep.omega is None else float(izrep.omega),
            "diagnostics": {k: float(v) for k, v in izc.diagnostics.items()},
        }

    # Consolidated unattributed residuals (the documented quadratic-pairing
    # sign flip is excluded here; it appears in family.diagnostics).  Each
    # residual is normalized by the magnitude of the quantity it compares,
    # so far-from-unit models are not misflagged.
    def scaled(delta, scale):
        return float(delta) / max(1.0, float(scale))

    violations = {
        "connection_split_residual":
            scaled(c.split_residual, np.max(np.abs(c.gamma_full))),
        "family_ricci_route_delta":
            scaled(fam.diagnostics["ricci_route_delta"],
                   np.max(np.abs(fam.ricci.data))),
        "family_scalar_attribution_residual":
            scaled(fam.diagnostics["scalar_attribution_residual"],
                   abs(fam.scalar_contracted)),
        "pressure_route_delta":
            scaled(matter.diagnostics.get("pressure_route_delta", 0.0),
                   abs(matter.p)),
    }
    if model.iz is not None:
        izd = report["iz"]["diagnostics"]
        violations["iz_r_route_delta"] = scaled(
            izd["r_route_delta"], np.max(np.abs(report["iz"]["r_tilde_ricci"])))
        violations["iz_scalar_route_delta"] = scaled(
            izd["scalar_route_delta"], abs(report["iz"]["k_scalar"]))
    worst = max(violations.values())
    report["diagnostics"] = {
        "tolerance": float(tol),
        "unattributed": violations,
        "worst_unattributed": float(worst),
        "status": "ok" if worst <= tol else "violation",
    }
    if raise_on_violation and worst > tol:
        raise ConsistencyError(
            f"two-route residual {worst:.3e} exceeds tolerance {tol:.1e}",
            violations)
    return report


def render_table(report: Mapping, title: str = "analysis") -> str:
    """Human-readable rendering of a report dict."""
    lines: list[str] = [f"== {title} ==".upper()]

    def fmt(v):
        if v is None:
            return "undefined"
        if isinstance(v, float):
            return f"{v:.12g}"
        return str(v)

    def matrix(name, rows):
        lines.append(f"  {name}:")
        for row in rows:
            lines.append("    [" + "  ".join(f"{v: .12g}" for v in row) + "]")

    def components(name, entries):
        if not entries:
            lines.append(f"  {name}: all zero")
            return
        lines.append(f"  {name}:")
        for entry in entries:
            idx = ",".join(str(i) for i in entry[:-1])
            lines.append(f"    [{idx}] = {entry[-1]: .12g}")

    def is_numeric_matrix(value):
        return (isinstance(value, list) and len(value) == 4
                and all(isinstance(r, list) and len(r) == 4
                        and all(isinstance(v, (int, float)) and not isinstance(v, bool)
                                for v in r)
                        for r in value))

    def section(name, data):
        lines.append(f"-- {name} --")
        for key, value in data.items():
            if key.endswith("_nonzero"):
                components(key, value)
            elif is_numeric_matrix(value):
                matrix(key, value)
            elif isinstance(value, dict):
                for k2, v2 in value.items():
                    lines.append(f"  {key}.{k2} = {fmt(v2)}")
            elif isinstance(value, list) and value and isinstance(value[0], list):
                lines.append(f"  {key}:")
                for row in value:
                    lines.append("    [" + ", ".join(fmt(v) for v in row) + "]")
            elif isinstance(value, list):
                lines.append(f"  {key} = [" + ", ".join(fmt(v) for v in value) + "]")
            else:
                lines.append(f"  {key} = {fmt(value)}")

    for name, data in report.items():
        if isinstance(data, dict):
            section(name, data)
        else:
            lines.append(f"{name} = {fmt(data)}")
    return "\n".join(lines)
