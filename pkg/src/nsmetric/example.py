"""Built-in worked example: diagonal symmetric part with time-dependent skew entries.

The model family has a diagonal symmetric part ``diag(s0(t), s1(t), s2(t),
s3(t))`` and an antisymmetric part built from six profiles ``n0(t) .. n5(t)``::

    anti = [[ 0,   n0,  n1,  n2],
            [-n0,  0,   n3,  n4],
            [-n1, -n3,  0,   n5],
            [-n2, -n4, -n5,  0 ]]

Only n3, n4, n5 enter the torsion tensor; n0, n1, n2 drop out.  This module
also carries the closed-form values this family admits (first-kind
connection components, covariant torsion, the variation tensor of the
torsion contraction, and the matter-term scalar), which the verification
suite compares against the general-purpose machinery.  Closed forms are
plain functions of the profile values and derivatives at a point.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .exprjet import DIM, evaluate_jet2
from .model import CoeffSet, SpacetimeModel, model_from_components

EXAMPLE_NAME = "example"

DEFAULT_S = ("1 + t^2", "2 + sin(t)", "2 + cos(t)", "3 + t")
DEFAULT_N = ("0", "0", "0", "t", "sin(t)", "t^2 / 2")


def example_model(s: Sequence[str] = DEFAULT_S,
                  n: Sequence[str] = DEFAULT_N,
                  coeffs: CoeffSet = CoeffSet(v1=1.0),
                  name: str = EXAMPLE_NAME,
                  reference_point: Sequence[float] = (1.0, 1.0, 1.0, 1.0)) -> SpacetimeModel:
    """Assemble the worked-example model from profile expression strings."""
    if len(s) != 4 or len(n) != 6:
        raise ValueError("need 4 diagonal profiles and 6 antisymmetric profiles")
    s0, s1, s2, s3 = (f"({e})" for e in s)
    n0, n1, n2, n3, n4, n5 = (f"({e})" for e in n)
    g = [
        [s0, n0, n1, n2],
        [f"-{n0}", s1, n3, n4],
        [f"-{n1}", f"-{n3}", s2, n5],
        [f"-{n2}", f"-{n4}", f"-{n5}", s3],
    ]
    return model_from_components(name, g, coeffs=coeffs, reference_point=reference_point)


@dataclass(frozen=True)
class ProfileValues:
    """Profile values and first derivatives at one time."""

    s: np.ndarray        # (4,)
    s_dot: np.ndarray    # (4,)
    n_dot: np.ndarray    # (6,) derivatives of n0..n5


def profile_values(model_s: Sequence[str], model_n: Sequence[str], t: float,
                   point_tail: Sequence[float] = (1.0, 1.0, 1.0)) -> ProfileValues:
    """Evaluate profile expressions and their t-derivatives via jets."""
    from .exprjet import parse_expression
    point = (t, *point_tail)
    sv = np.zeros(4)
    sd = np.zeros(4)
    nd = np.zeros(6)
    for k, src in enumerate(model_s):
        jet = evaluate_jet2(parse_expression(src, ("t", "x", "y", "z")), point)
        sv[k] = jet.value
        sd[k] = jet.grad[0]
    for k, src in enumerate(model_n):
        jet = evaluate_jet2(parse_expression(src, ("t", "x", "y", "z")), point)
        nd[k] = jet.grad[0]
    return ProfileValues(sv, sd, nd)


def closed_first_kind(p: ProfileValues) -> np.ndarray:
    """First-kind connection components of the diagonal symmetric part."""
    gamma = np.zeros((DIM, DIM, DIM))
    gamma[0, 0, 0] = 0.5 * p.s_dot[0]
    for k in (1, 2, 3):
        gamma[0, k, k] = -0.5 * p.s_dot[k]
        gamma[k, 0, k] = 0.5 * p.s_dot[k]
        gamma[k, k, 0] = 0.5 * p.s_dot[k]
    return gamma


#: the 18 signed positions of the covariant torsion tensor: (indices, sign, profile)
TORSION_PATTERN: tuple[tuple[tuple[int, int, int], float, int], ...] = tuple(
    (perm, sign, prof)
    for prof, base in ((3, (0, 1, 2)), (4, (0, 1, 3)), (5, (0, 2, 3)))
    for perm, sign in (
        ((base[0], base[1], base[2]), -1.0),
        ((base[0], base[2], base[1]), +1.0),
        ((base[1], base[0], base[2]), +1.0),
        ((base[1], base[2], base[0]), -1.0),
        ((base[2], base[0], base[1]), -1.0),
        ((base[2], base[1], base[0]), +1.0),
    )
)


def closed_torsion_lower(p: ProfileValues) -> np.ndarray:
    """Covariant torsion components; six signed permutations per profile."""
    t = np.zeros((DIM, DIM, DIM))
    for idx, sign, prof in TORSION_PATTERN:
        t[idx] = sign * p.n_dot[prof]
    return t


def closed_tau(p: ProfileValues) -> np.ndarray:
    """Variation-tensor components as printed for this family (diagonal s)."""
    s0, s1, s2, s3 = p.s
    d3, d4, d5 = p.n_dot[3], p.n_dot[4], p.n_dot[5]
    tau = np.zeros((DIM, DIM))
    tau[0, 0] = 6.0 / (s1 * s2 * s3) * (d3**2 * s3 + d4**2 * s2 + d5**2 * s1)
    tau[1, 1] = 6.0 / (s0 * s2 * s3) * (d3**2 * s3 + d4**2 * s2)
    tau[2, 2] = 6.0 / (s0 * s1 * s3) * (d3**2 * s3 + d5**2 * s1)
    tau[3, 3] = 6.0 / (s0 * s1 * s2) * (d4**2 * s2 + d5**2 * s1)
    tau[1, 2] = tau[2, 1] = 6.0 / (s0 * s3) * d4 * d5
    tau[1, 3] = tau[3, 1] = -6.0 / (s0 * s2) * d3 * d5
    tau[2, 3] = tau[3, 2] = 6.0 / (s0 * s1) * d3 * d4
    return tau


def closed_tau_trace(p: ProfileValues) -> float:
    """Trace display as printed; inconsistent with contracting ``closed_tau``."""
    s0, s1, s2, s3 = p.s
    d3, d4, d5 = p.n_dot[3], p.n_dot[4], p.n_dot[5]
    s = s0 + s1 + s2 + s3
    return (d3**2 * s3 * (s - s3) + d4**2 * s2 * (s - s2) + d5**2 * s1 * (s - s1)) \
        / (s0 * s1 * s2 * s3)


def closed_lagrangian(p: ProfileValues, v1w: float) -> float:
    """Matter-term scalar in the closed form printed for this family.

    Differs from the direct sextuple contraction by the constant factor
    4/s0; the verification ledger records the measured ratio.
    """
    s0, s1, s2, s3 = p.s
    d3, d4, d5 = p.n_dot[3], p.n_dot[4], p.n_dot[5]
    det = s0 * s1 * s2 * s3
    return -1.5 * v1w / det * s0 * (s3 * d3**2 + s2 * d4**2 + s1 * d5**2)


def direct_lagrangian(p: ProfileValues, v1w: float) -> float:
    """Direct-contraction value of the matter scalar for this family."""
    s0, s1, s2, s3 = p.s
    d3, d4, d5 = p.n_dot[3], p.n_dot[4], p.n_dot[5]
    return -6.0 * v1w * (d3**2 / (s0 * s1 * s2)
                         + d4**2 / (s0 * s1 * s3)
                         + d5**2 / (s0 * s2 * s3))
