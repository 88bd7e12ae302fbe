"""Worked-example verification harness with a discrepancy ledger.

Sweeps the built-in example family over a time grid and checks the engine
against every closed form that family admits.  Findings fall in two bins:

* checks - quantities that must agree (connection components, torsion signs,
  the variation-tensor display, round trips); any failure is an unexplained
  mismatch and the run fails;
* ledger rows - closed-form displays that are *documented* as internally
  inconsistent, recorded with the measured direct-vs-printed relation.  With
  ``strict`` they are treated as failures too.

Singular grid points (degenerate symmetric part) are reported as skips, not
failures.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .connection import generalized_christoffel
from .curvature import curvature_family_at, riemann_at
from .errors import MathError, SingularMetricError
from .example import (DEFAULT_S, closed_first_kind, closed_lagrangian,
                      closed_tau, closed_tau_trace, closed_torsion_lower,
                      direct_lagrangian, example_model, profile_values,
                      TORSION_PATTERN)
from .matter import (MatterFieldTerm, combine_matter_fields, comoving_frame,
                     eisenhart_matter_lagrangian, emt_family,
                     solve_antisym_profile)
from .model import CoeffSet, metric_at
from .tensors import Tensor

LEDGER_S = ("2", "2 + sin(t)", "2 + cos(t)", "3 + t")  # constant s0 for ratio rows

N_PROFILES = (
    ("0", "0", "0", "t", "sin(t)", "t^2 / 2"),
    ("t", "t^2", "1", "2 * t", "cos(t)", "t^3 / 6"),
    ("0", "1", "t", "t^2 / 4", "t", "sin(t)"),
)


@dataclass
class Check:
    name: str
    passed: bool
    error: float
    tolerance: float
    detail: str = ""


@dataclass
class LedgerRow:
    quantity: str
    direct: float
    printed: float
    ratio: float | None
    status: str  # "documented" | "confirmed" | "unexplained"
    note: str = ""


@dataclass
class VerificationResult:
    checks: list[Check] = field(default_factory=list)
    ledger: list[LedgerRow] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return (all(c.passed for c in self.checks)
                and all(r.status != "unexplained" for r in self.ledger))

    def exit_code(self, strict: bool = False) -> int:
        if not self.ok:
            return 3
        if strict and any(r.status == "documented" for r in self.ledger):
            return 3
        return 0

    def as_dict(self) -> dict:
        def clean(obj):
            if isinstance(obj, dict):
                return {k: clean(v) for k, v in obj.items()}
            if isinstance(obj, (bool, np.bool_)):
                return bool(obj)
            if isinstance(obj, str) or obj is None:
                return obj
            if isinstance(obj, (int, np.integer)):
                return int(obj)
            if isinstance(obj, (float, np.floating)):
                return float(obj)
            return obj

        return {
            "checks": [clean(vars(c)) for c in self.checks],
            "ledger": [clean(vars(r)) for r in self.ledger],
            "skipped": [clean(s) for s in self.skipped],
            "ok": self.ok,
        }


def _grid(spec: tuple[float, float, int]) -> np.ndarray:
    start, stop, steps = spec
    return np.linspace(start, stop, int(steps))


def run_verification(grid: tuple[float, float, int] = (0.5, 2.0, 25),
                     s: tuple[str, str, str, str] = DEFAULT_S,
                     coeffs: CoeffSet = CoeffSet(v1=1.0),
                     seed: int = 20240 ) -> VerificationResult:
    """Run the full example verification sweep."""
    res = VerificationResult()
    ts = _grid(grid)
    rng = np.random.default_rng(seed)

    _check_connection_and_torsion(res, ts, s)
    _check_tau_and_lagrangian(res, ts, s, coeffs)
    _ledger_lagrangian_ratio(res, ts, coeffs)
    _ledger_scalar_pairing(res, s, coeffs)
    _ledger_density_display(res, s, coeffs)
    _check_quadrature_roundtrip(res)
    _check_omega_invariance(res, ts, s)
    _check_linearity(res, rng)
    return res


def _usable_points(res, ts, s, n):
    model = example_model(s, n)
    for t in ts:
        try:
            m = metric_at(model, (float(t), 1.0, 1.0, 1.0))
        except (SingularMetricError, MathError) as exc:
            res.skipped.append({"t": float(t), "reason": str(exc)})
            continue
        yield float(t), m


def _check_connection_and_torsion(res: VerificationResult, ts, s):
    worst_fk = 0.0
    worst_fk_zero = 0.0
    worst_pattern = 0.0
    worst_zero = 0.0
    for n in N_PROFILES:
        for t, m in _usable_points(res, ts, s, n):
            c = generalized_christoffel(m)
            p = profile_values(s, n, t)
            closed = closed_first_kind(p)
            listed = closed != 0.0
            worst_fk = max(worst_fk, float(np.max(
                np.abs((c.first_kind_sym - closed)[listed]), initial=0.0)))
            worst_fk_zero = max(worst_fk_zero, float(np.max(
                np.abs(c.first_kind_sym[~listed]), initial=0.0)))
            tor = c.torsion_low.data
            pattern_mask = np.zeros(tor.shape, dtype=bool)
            closed_t = closed_torsion_lower(p)
            for idx, sign, prof in TORSION_PATTERN:
                pattern_mask[idx] = True
                worst_pattern = max(worst_pattern, abs(tor[idx] - sign * p.n_dot[prof]))
            worst_zero = max(worst_zero, float(np.max(np.abs(tor[~pattern_mask]))))
            worst_pattern = max(worst_pattern,
                                float(np.max(np.abs(tor - closed_t))))
    res.checks.append(Check("first-kind-connection", worst_fk <= 1e-9, worst_fk, 1e-9,
                            "closed forms of the diagonal family"))
    res.checks.append(Check("first-kind-zeros", worst_fk_zero <= 1e-12,
                            worst_fk_zero, 1e-12, "components printed as zero"))
    res.checks.append(Check("torsion-pattern", worst_pattern <= 1e-10, worst_pattern,
                            1e-10, "18 signed components, three profiles"))
    res.checks.append(Check("torsion-zeros", worst_zero <= 1e-12, worst_zero, 1e-12,
                            "remaining 46 components"))


def _check_tau_and_lagrangian(res: VerificationResult, ts, s, coeffs):
    worst_tau = 0.0
    worst_lm = 0.0
    tau13_sign_ok = True
    n = N_PROFILES[1]
    for t, m in _usable_points(res, ts, s, n):
        c = generalized_christoffel(m)
        p = profile_values(s, n, t)
        tm = eisenhart_matter_lagrangian(c, m, coeffs)
        printed = closed_tau(p)
        worst_tau = max(worst_tau, float(np.max(np.abs(tm.tau.data - printed))))
        if abs(printed[1, 3]) > 1e-9 and np.sign(tm.tau.data[1, 3]) != np.sign(printed[1, 3]):
            tau13_sign_ok = False
        worst_lm = max(worst_lm, abs(tm.lagrangian - direct_lagrangian(p, coeffs.v1w)))
    res.checks.append(Check("tau-display", worst_tau <= 1e-9, worst_tau, 1e-9,
                            "variation tensor vs printed closed form"))
    res.checks.append(Check("tau13-sign-arbiter", tau13_sign_ok,
                            0.0 if tau13_sign_ok else 1.0, 0.0,
                            "printed minus sign on the (1,3) component confirmed"))
    res.checks.append(Check("lagrangian-direct-form", worst_lm <= 1e-9, worst_lm, 1e-9,
                            "direct contraction vs per-profile closed sum"))
    res.ledger.append(LedgerRow(
        "tau_display", 1.0, 1.0, 1.0, "confirmed",
        "printed variation-tensor components (including the (1,3) sign) match "
        "the pointwise metric variation exactly; the single-slot variation is "
        "1/3 of the printed value"))

    # trace display: printed vs contraction of the (confirmed) tau components
    t_mid = float(ts[len(ts) // 2])
    model = example_model(s, n)
    m = metric_at(model, (t_mid, 1.0, 1.0, 1.0))
    c = generalized_christoffel(m)
    tm = eisenhart_matter_lagrangian(c, m, coeffs)
    p = profile_values(s, n, t_mid)
    direct_trace = float(np.einsum("ij,ij->", m.sym_inv, tm.tau.data))
    printed_trace = closed_tau_trace(p)
    res.ledger.append(LedgerRow(
        "tau_trace_display", direct_trace, printed_trace,
        None if printed_trace == 0 else direct_trace / printed_trace,
        "documented",
        "printed trace display is inconsistent with contracting the printed "
        "components"))

    # brute-force sextuple loop at one point
    brute = 0.0
    gi = m.sym_inv
    tl = c.torsion_low.data
    for a in range(4):
        for b in range(4):
            for g in range(4):
                for d in range(4):
                    for e in range(4):
                        for z in range(4):
                            brute += gi[g, d] * gi[e, a] * gi[b, z] * tl[e, g, b] * tl[a, d, z]
    brute_lm = -coeffs.v1w * brute
    res.checks.append(Check("lagrangian-bruteforce", abs(brute_lm - tm.lagrangian) <= 1e-9,
                            abs(brute_lm - tm.lagrangian), 1e-9,
                            "4^6 loop oracle at one grid point"))


def _ledger_lagrangian_ratio(res: VerificationResult, ts, coeffs):
    """Measured ratio of the direct contraction to the printed closed form.

    Uses a constant-s0 profile family, where the ratio is the constant 4/s0.
    """
    n = N_PROFILES[0]
    ratios = []
    direct_mid = printed_mid = None
    for t, m in _usable_points(res, ts, LEDGER_S, n):
        c = generalized_christoffel(m)
        tm = eisenhart_matter_lagrangian(c, m, coeffs)
        p = profile_values(LEDGER_S, n, t)
        printed = closed_lagrangian(p, coeffs.v1w)
        if printed == 0.0:
            continue
        ratios.append(tm.lagrangian / printed)
        if direct_mid is None:
            direct_mid, printed_mid = tm.lagrangian, printed
    spread = max(ratios) - min(ratios) if ratios else float("inf")
    mean = float(np.mean(ratios)) if ratios else float("nan")
    res.checks.append(Check("lagrangian-ratio-constant", spread <= 1e-9, spread, 1e-9,
                            f"direct/printed ratio constant over the grid "
                            f"(measured {mean:.12g})"))
    res.ledger.append(LedgerRow(
        "lagrangian_closed_form", direct_mid or 0.0, printed_mid or 0.0, mean,
        "documented",
        "printed closed form differs from the direct contraction by the "
        "constant factor 4/s0 (here s0=2, ratio 2); with non-constant s0 the "
        "ratio varies as 4/s0(t)"))


def _ledger_scalar_pairing(res: VerificationResult, s, coeffs):
    model = example_model(s, N_PROFILES[0], coeffs=coeffs)
    m = metric_at(model, (1.25, 1.0, 1.0, 1.0))
    c = generalized_christoffel(m)
    cur = riemann_at(c)
    fam = curvature_family_at(c, cur, m, coeffs, check_tol=None)
    quad_closed = -(coeffs.v1w) * fam.torsion_contraction
    quad_contracted = fam.scalar_contracted - cur.scalar
    ratio = None if quad_closed == 0 else quad_contracted / quad_closed
    status = "documented" if fam.diagnostics["scalar_attribution_residual"] <= 1e-9 \
        else "unexplained"
    res.ledger.append(LedgerRow(
        "scalar_family_quadratic_pairing", quad_contracted, quad_closed, ratio,
        status,
        "contracting the family Ricci pairs the torsion factors first-to-last; "
        "for metric torsion (totally antisymmetric covariant components) that "
        "is the negative of the printed aligned pairing"))
    res.checks.append(Check(
        "family-ricci-two-route",
        fam.diagnostics["ricci_route_delta"] <= 1e-8,
        fam.diagnostics["ricci_route_delta"], 1e-8,
        "contraction of the family tensor vs the closed Ricci display"))


def _ledger_density_display(res: VerificationResult, s, coeffs):
    """Printed density family carries -(3/2) C where the tensor implies -(1/2) C."""
    model = example_model(s, N_PROFILES[0], coeffs=coeffs)
    m = metric_at(model, (1.25, 1.0, 1.0, 1.0))
    c = generalized_christoffel(m)
    frame = comoving_frame(m)
    tm = eisenhart_matter_lagrangian(c, m, coeffs)
    report = emt_family(c, m, coeffs, frame=frame)
    uu = np.einsum("ij,i,j->", 3.0 * tm.tau.data + 2.0 * tm.w_tensor.data,
                   frame.u_up, frame.u_up)
    rho_from_t = report.rho
    rho_printed = coeffs.v1w * (uu - 1.5 * tm.contraction)
    res.ledger.append(LedgerRow(
        "density_family_display", rho_from_t, float(rho_printed),
        None, "documented",
        "printed display multiplies the contraction by 3/2 where substituting "
        "the family tensor gives 1/2; the difference equals the matter scalar"))

    # combination pressure row of the printed table vs the frame machinery
    cur = riemann_at(c)
    term = MatterFieldTerm("probe", 1.0, 0.8,
                           Tensor(np.diag([0.4, -0.2, 0.7, 0.1]), ("l", "l")))
    combined = combine_matter_fields([term], m, cur, frame, 0.0)
    v = term.v_low.data
    vuu = float(np.einsum("ij,i,j->", v, frame.u_up, frame.u_up))
    vtrace = float(np.einsum("ij,ij->", m.sym_inv, v))
    printed_p = -(vuu - vtrace - term.l_value) / 3.0
    res.ledger.append(LedgerRow(
        "combination_pressure_display", combined.p, printed_p, None, "documented",
        "printed combination table carries the term scalar with weight -1 "
        "inside the bracket where the tensor substitution gives +3/2"))


def _check_quadrature_roundtrip(res: VerificationResult):
    sol = solve_antisym_profile(["1", "1", "1", "1"], (1.0, 0.0, 0.0), "3/2",
                                CoeffSet(v1=-1.0), (0.0, 2.0), 201)
    analytic_err = float(np.max(np.abs(sol.primary[:, 0]
                                       - (sol.ts - sol.ts[0]))))
    rt = float(np.max(np.abs(sol.roundtrip_residuals)))
    mirror_exact = bool(np.array_equal(sol.mirrored, -sol.primary))
    res.checks.append(Check("quadrature-analytic", analytic_err <= 1e-8,
                            analytic_err, 1e-8, "constant integrand recovers a line"))
    res.checks.append(Check("quadrature-roundtrip", rt <= 1e-8, rt, 1e-8,
                            "closed form on the recovered profile reproduces the target"))
    res.checks.append(Check("branch-mirror", mirror_exact,
                            0.0 if mirror_exact else 1.0, 0.0,
                            "second branch is the exact negation"))

    sol2 = solve_antisym_profile(["1", "2 + sin(t)", "2 + cos(t)", "3 + t"],
                                 (1.0, 0.5, 0.25), "-(1 + t^2) / 20",
                                 CoeffSet(v1=1.0), (0.5, 1.5), 201)
    rt2 = float(np.max(np.abs(sol2.roundtrip_residuals)))
    res.checks.append(Check("quadrature-roundtrip-varying", rt2 <= 1e-6, rt2, 1e-6,
                            "non-constant profiles and target"))


def _check_omega_invariance(res: VerificationResult, ts, s):
    worst = 0.0
    n = N_PROFILES[0]
    base = CoeffSet(v1=0.7, w=0.3)
    doubled = CoeffSet(v1=1.4, w=0.6)
    for t, m in _usable_points(res, ts, s, n):
        c = generalized_christoffel(m)
        r1 = emt_family(c, m, base)
        r2 = emt_family(c, m, doubled)
        if r1.omega is None or r2.omega is None:
            continue
        worst = max(worst, abs(r1.omega - r2.omega))
    res.checks.append(Check("omega-coefficient-independence", worst <= 1e-10,
                            worst, 1e-10, "state parameter under (v'+w) rescaling"))


def _check_linearity(res: VerificationResult, rng):
    model = example_model()
    m = metric_at(model, (1.0, 1.0, 1.0, 1.0))
    c = generalized_christoffel(m)
    cur = riemann_at(c)
    frame = comoving_frame(m)

    worst = 0.0
    for _ in range(20):
        terms = []
        for k in range(3):
            v = rng.normal(size=(4, 4))
            v = 0.5 * (v + v.T)
            terms.append(MatterFieldTerm(f"r{k}", float(rng.normal()),
                                         float(rng.normal()), Tensor(v, ("l", "l"))))
        combined = combine_matter_fields(terms, m, cur, frame, 0.0)
        parts = [combine_matter_fields(
            [MatterFieldTerm(t.label, 1.0, t.l_value, t.v_low)], m, cur, frame, 0.0)
            for t in terms]
        t_sum = sum(t.alpha * p.t_low.data for t, p in zip(terms, parts))
        worst = max(worst, float(np.max(np.abs(combined.t_low.data - t_sum))))
        for attr in ("trace", "p", "rho"):
            lin = sum(t.alpha * getattr(p, attr) for t, p in zip(terms, parts))
            worst = max(worst, abs(getattr(combined, attr) - lin))
    res.checks.append(Check("combination-linearity", worst <= 1e-12, worst, 1e-12,
                            "tensor, trace, pressure, density over random terms"))

    # engineered two-fluid counterexample for the state parameter
    fluids = [(1.0, 3.0), (-1.0, 1.0)]
    terms = []
    for k, (p0, rho0) in enumerate(fluids):
        t_target = rho0 * np.outer(frame.u_low, frame.u_low) - p0 * frame.h_low
        v = -t_target  # L = 0, so V = -T
        terms.append(MatterFieldTerm(f"fluid{k}", 1.0, 0.0, Tensor(v, ("l", "l"))))
    singles = [combine_matter_fields([t], m, cur, frame, 0.0) for t in terms]
    combined = combine_matter_fields(terms, m, cur, frame, 0.0)
    omega_sum = sum(s.omega for s in singles)
    gap = abs((combined.omega or 0.0) - omega_sum)
    res.checks.append(Check("omega-nonlinearity", gap > 0.1, gap, 0.1,
                            f"two-fluid counterexample gap {gap:.3f} > 0.1"))
