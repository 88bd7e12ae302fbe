"""Supplied-torsion space: connection modes, curvature routes, matter report."""

import numpy as np
import pytest

from nsmetric.curvature import riemann_at
from nsmetric.errors import ModelError
from nsmetric.izspace import (K_BLOCKS, iz_connection_at, iz_curvature_at,
                              iz_emt_at, iz_variation_tensor)
from nsmetric.model import CoeffSet, load_model

CURVED_G = """
[metric]
g = [
  ["1", "0", "0", "0"],
  ["0", "-1 - t^2", "0", "0"],
  ["0", "0", "-2 - sin(t)", "0"],
  ["0", "0", "0", "-3 - x^2"],
]
"""

FLAT_G = """
[metric]
g = [
  ["1", "0", "0", "0"],
  ["0", "-1", "0", "0"],
  ["0", "0", "-1", "0"],
  ["0", "0", "0", "-1"],
]
"""

TORSION = """
"T[0,1,2]" = "0.3 * t"
"T[1,2,3]" = "sin(t) + x"
"T[2,0,3]" = "0.5"
"""

COEFFS = CoeffSet(u=0.4, u1=0.7, v=-0.3, v1=1.2, w=0.5)


def load_iz(g_doc, torsion="", mode="assume_zero"):
    doc = g_doc + f"\n[iz]\nmetricity_mode = \"{mode}\"\n" + torsion
    return load_model(doc, "iz")


def test_zero_torsion_collapse_assume_zero():
    model = load_iz(CURVED_G)
    conn = iz_connection_at(model, (0.8, 0.4, 1.0, 1.0))
    base_cur = riemann_at(conn.base)
    assert np.max(np.abs(conn.gamma_sym - conn.base.gamma_sym)) == 0.0
    assert not conn.eta.data.any()
    izc = iz_curvature_at(conn, base_cur, COEFFS)
    assert np.max(np.abs(izc.r_tilde.data - base_cur.riemann.data)) < 1e-10
    assert abs(izc.k_scalar - base_cur.scalar) < 1e-10
    assert abs(izc.k_scalar_closed - base_cur.scalar) < 1e-10
    assert izc.l_tilde_m == 0.0


def test_zero_torsion_fixed_point_one_iteration():
    model = load_iz(CURVED_G, mode="fixed_point")
    conn = iz_connection_at(model, (0.8, 0.4, 1.0, 1.0))
    assert conn.iterations == 1
    assert np.max(np.abs(conn.gamma_sym - conn.base.gamma_sym)) < 1e-15
    assert np.max(np.abs(conn.nonmetricity)) < 1e-12


def test_eta_formula_on_flat_background(rng):
    model = load_iz(FLAT_G, TORSION)
    conn = iz_connection_at(model, (0.7, 0.2, 0.0, 0.0))
    gi = conn.metric.sym_inv
    tl = conn.torsion_low.data
    expected = np.einsum("ia,jak->ijk", gi, tl) + np.einsum("ia,kaj->ijk", gi, tl)
    assert np.max(np.abs(conn.eta.data - expected)) < 1e-14


def test_eta_symmetric_lower_pair(rng):
    model = load_iz(CURVED_G, TORSION)
    for _ in range(5):
        pt = (float(rng.uniform(0.5, 1.5)), float(rng.uniform(-1, 1)), 0.0, 0.0)
        conn = iz_connection_at(model, pt)
        eta = conn.eta.data
        assert np.max(np.abs(eta - eta.transpose(0, 2, 1))) < 1e-12


def test_gamma_identity():
    model = load_iz(CURVED_G, TORSION)
    conn = iz_connection_at(model, (0.9, 0.1, 0.0, 0.0))
    assert np.max(np.abs(conn.gamma_sym
                         - (conn.base.gamma_sym - 0.5 * conn.eta.data))) < 1e-14


def test_curvature_two_routes(rng):
    model = load_iz(CURVED_G, TORSION)
    for _ in range(5):
        pt = (float(rng.uniform(0.5, 1.5)), float(rng.uniform(-1, 1)), 0.0, 0.0)
        conn = iz_connection_at(model, pt)
        base_cur = riemann_at(conn.base)
        izc = iz_curvature_at(conn, base_cur, COEFFS)
        assert izc.diagnostics["r_route_delta"] < 1e-9
        assert izc.diagnostics["scalar_route_delta"] < 1e-9


def test_flat_constant_torsion_quadratic_only():
    model = load_iz(FLAT_G, "\"T[0,1,2]\" = \"0.4\"\n\"T[1,2,3]\" = \"-0.7\"\n")
    conn = iz_connection_at(model, (0.0, 0.0, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    izc = iz_curvature_at(conn, base_cur, COEFFS)
    eta = conn.eta.data
    quad = 0.25 * (np.einsum("ajm,ian->ijmn", eta, eta)
                   - np.einsum("ajn,iam->ijmn", eta, eta))
    assert np.max(np.abs(izc.r_tilde.data - quad)) < 1e-13


def test_matter_scalar_brute_force_flat():
    model = load_iz(FLAT_G, "\"T[0,1,2]\" = \"0.8\"\n")
    conn = iz_connection_at(model, (0.0, 0.0, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    coeffs = CoeffSet(v1=1.0, w=0.0)  # u' = 0
    izc = iz_curvature_at(conn, base_cur, coeffs)
    gi = conn.metric.sym_inv
    t_up = conn.torsion_up.data
    brute = 0.0
    for g in range(4):
        for d in range(4):
            for a in range(4):
                for b in range(4):
                    brute += gi[g, d] * t_up[a, g, b] * t_up[b, d, a]
    quad_part = -coeffs.v1w * brute
    # flat metric, constant torsion: derivative pieces of eta survive only
    # through the eta-quadratic scalar terms; isolate the printed quadratics
    eta = conn.eta.data
    eta_terms = (0.25 * float(np.einsum("gd,agd,bab->", gi, eta, eta))
                 - 0.25 * float(np.einsum("gd,abg,bad->", gi, eta, eta)))
    assert abs(izc.l_tilde_m - (quad_part + eta_terms)) < 1e-12


def test_fixed_point_with_torsion_collapses_eta():
    """The implicit definition admits the base symmetric part as its fixed
    point: the torsion terms cancel against the induced non-metricity."""
    model = load_iz(CURVED_G, TORSION, mode="fixed_point")
    conn = iz_connection_at(model, (0.8, 0.4, 0.0, 0.0))
    assert conn.iterations <= 2
    assert np.max(np.abs(conn.eta.data)) < 1e-12
    assert np.max(np.abs(conn.gamma_sym - conn.base.gamma_sym)) < 1e-12
    # non-metricity equals -(Tt_bac + Tt_abc)/2 at the fixed point
    tl = conn.torsion_low.data
    expected_nm = -0.5 * (np.einsum("bac->abc", tl) + tl)
    assert np.max(np.abs(conn.nonmetricity - expected_nm)) < 1e-12


def test_curvature_blocks_toggle():
    model = load_iz(CURVED_G, TORSION)
    conn = iz_connection_at(model, (0.9, 0.3, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    all_on = iz_curvature_at(conn, base_cur, COEFFS)
    none_on = iz_curvature_at(conn, base_cur, COEFFS, blocks=())
    assert np.array_equal(none_on.k_full.data, base_cur.riemann.data)
    # blocks decompose the full display additively
    total = base_cur.riemann.data.copy()
    for block in K_BLOCKS:
        single = iz_curvature_at(conn, base_cur, COEFFS, blocks=(block,))
        total = total + (single.k_full.data - base_cur.riemann.data)
    assert np.max(np.abs(total - all_on.k_full.data)) < 1e-12
    with pytest.raises(ValueError, match="unknown"):
        iz_curvature_at(conn, base_cur, COEFFS, blocks=("nope",))


def test_alternate_index_reading_differs():
    model = load_iz(CURVED_G, TORSION)
    conn = iz_connection_at(model, (0.9, 0.3, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    printed = iz_curvature_at(conn, base_cur, COEFFS)
    flipped = iz_curvature_at(conn, base_cur, COEFFS, printed_index_order=False)
    assert np.max(np.abs(printed.k_full.data - flipped.k_full.data)) > 1e-6


def test_iz_emt_zero_inputs():
    model = load_iz(CURVED_G)
    conn = iz_connection_at(model, (0.8, 0.0, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    rep = iz_emt_at(conn, base_cur, COEFFS, None, conn.metric)
    assert not rep.t_low.data.any()


def test_iz_emt_pure_scalar_term():
    model = load_iz(FLAT_G, "\"T[0,1,2]\" = \"0.8\"\n")
    conn = iz_connection_at(model, (0.0,) * 4)
    base_cur = riemann_at(conn.base)
    izc = iz_curvature_at(conn, base_cur, CoeffSet(v1=1.0))
    ell = izc.l_tilde_m
    assert ell != 0.0
    rep = iz_emt_at(conn, base_cur, CoeffSet(v1=1.0), None, conn.metric)
    assert np.max(np.abs(rep.t_low.data - 0.5 * ell * conn.metric.sym_val)) < 1e-13
    assert abs(rep.trace - 2.0 * ell) < 1e-12


def _modified_cov_deriv_12(vals, grads, gamma):
    return (grads
            + np.einsum("ian,ajm->ijmn", gamma, vals)
            - np.einsum("ajn,iam->ijmn", gamma, vals)
            - np.einsum("amn,ija->ijmn", gamma, vals))


@pytest.mark.parametrize("mode", ["assume_zero", "fixed_point"])
def test_printed_family_display_equals_direct_route(mode):
    """All correction blocks together must reproduce the direct family:
    curvature of the modified symmetric part plus derivative/quadratic terms
    taken with the modified connection."""
    model = load_iz(CURVED_G, TORSION, mode=mode)
    conn = iz_connection_at(model, (0.9, 0.3, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    izc = iz_curvature_at(conn, base_cur, COEFFS)

    t_up = conn.torsion_up.data
    d_t_mod = _modified_cov_deriv_12(t_up, conn.torsion_up_grad, conn.gamma_sym)
    direct = (izc.r_tilde.data
              + COEFFS.u * d_t_mod
              + COEFFS.u1 * np.einsum("ijnm->ijmn", d_t_mod)
              + COEFFS.v * np.einsum("ajm,ian->ijmn", t_up, t_up)
              + COEFFS.v1 * np.einsum("ajn,iam->ijmn", t_up, t_up)
              + COEFFS.w * np.einsum("amn,iaj->ijmn", t_up, t_up))
    assert np.max(np.abs(izc.k_full.data - direct)) < 1e-12


def test_printed_theorem_pressure_density_forms():
    """Printed matter-side pressure/density expressions of the supplied-
    torsion theorem match the frame-machinery values."""
    doc = CURVED_G + "\n[iz]\n\"T[0,1,2]\" = \"0.3 * t\"\n" \
        + "[iz.variation]\n\"V[0,0]\" = \"0.25\"\n\"V[1,1]\" = \"-0.5\"\n" \
        + "\"V[2,3]\" = \"0.1\"\n\"V[3,2]\" = \"0.1\"\n"
    model = load_model(doc, "thm")
    conn = iz_connection_at(model, (0.8, 0.0, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    m = conn.metric
    v = iz_variation_tensor(model, m)
    izc = iz_curvature_at(conn, base_cur, COEFFS)
    rep = iz_emt_at(conn, base_cur, COEFFS, v, m)

    from nsmetric.matter import comoving_frame
    fr = comoving_frame(m)
    ell = izc.l_tilde_m
    v_trace = float(np.einsum("ij,ij->", m.sym_inv, v.data))
    v_uu = float(np.einsum("ij,i,j->", v.data, fr.u_up, fr.u_up))
    assert abs(rep.p - (v_trace / 3.0 - v_uu / 3.0 - ell / 2.0)) < 1e-12
    assert abs(rep.rho - (-v_uu + ell / 2.0)) < 1e-12
    assert abs(rep.trace - (-v_trace + 2.0 * ell)) < 1e-12


def test_iz_emt_comoving_density():
    doc = CURVED_G + "\n[iz]\n\"T[0,1,2]\" = \"0.3 * t\"\n" \
        + "[iz.variation]\n\"V[0,0]\" = \"0.25\"\n\"V[1,1]\" = \"-0.5\"\n"
    model = load_model(doc, "izv")
    conn = iz_connection_at(model, (0.8, 0.0, 0.0, 0.0))
    base_cur = riemann_at(conn.base)
    m = conn.metric
    v = iz_variation_tensor(model, m)
    assert v.data[0, 0] == 0.25 and v.data[1, 1] == -0.5
    izc = iz_curvature_at(conn, base_cur, COEFFS)
    rep = iz_emt_at(conn, base_cur, COEFFS, v, m)
    # comoving with g_00 = 1: density is -V_00 + L/2
    assert abs(rep.rho - (-0.25 + 0.5 * izc.l_tilde_m)) < 1e-12


def test_random_supplied_torsion_eta_symmetry(rng):
    for k in range(5):
        entries = []
        for _ in range(4):
            i, j = rng.integers(0, 4, size=2)
            k2 = (j + 1 + rng.integers(0, 3)) % 4
            if j == k2:
                continue
            entries.append(f'"T[{i},{j},{k2}]" = "{float(rng.normal()):.6f} * t"')
        if not entries:
            continue
        doc = CURVED_G + "\n[iz]\n" + "\n".join(dict.fromkeys(entries)) + "\n"
        try:
            model = load_model(doc, "rand")
        except ModelError:
            continue  # conflicting duplicate orientation; not the point here
        conn = iz_connection_at(model, (0.9, 0.2, 0.0, 0.0))
        eta = conn.eta.data
        assert np.max(np.abs(eta - eta.transpose(0, 2, 1))) < 1e-12
