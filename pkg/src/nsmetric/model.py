"""Spacetime models: expression-valued non-symmetric metrics and model files.

A model file is a UTF-8 TOML document; the full grammar is documented in
``docs/model_format.md``.  Components are expression strings over the four
declared coordinates and the named parameters.  Unknown sections or keys are
rejected rather than ignored.

``metric_at`` evaluates all 16 components as order-2 jets at a point and
splits them into the symmetric part (with its inverse and determinant) and
the antisymmetric part.  The symmetric/antisymmetric parts are stored with
mirrored entries, so their symmetry properties hold bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

from .errors import ModelError
from .exprjet import (DIM, Expression, FUNCTIONS, evaluate_jet2,
                      parse_expression, to_source)
from .tensors import SymMetricAtPoint, invert_sym4

_SECTIONS = {"coordinates", "metric", "params", "coefficients", "frame",
             "reference_point", "variation", "matter_term", "iz"}

COMOVING = "comoving"


@dataclass(frozen=True)
class CoeffSet:
    """The five curvature-family coefficients."""

    u: float = 0.0
    u1: float = 0.0
    v: float = 0.0
    v1: float = 0.0
    w: float = 0.0

    @property
    def v1w(self) -> float:
        return self.v1 + self.w

    def as_dict(self) -> dict[str, float]:
        return {"u": self.u, "u1": self.u1, "v": self.v, "v1": self.v1, "w": self.w}


@dataclass(frozen=True)
class MatterTermSpec:
    label: str
    alpha: float
    lagrangian: Expression
    variation: tuple[tuple[Expression, ...], ...]  # 4x4 component expressions


@dataclass(frozen=True)
class IzSpec:
    metricity_mode: str  # "assume_zero" | "fixed_point"
    torsion: dict[tuple[int, int, int], Expression]
    variation: dict[tuple[int, int], Expression]


@dataclass(frozen=True)
class SpacetimeModel:
    name: str
    coords: tuple[str, str, str, str]
    g_expr: tuple[tuple[Expression, ...], ...]
    params: dict[str, float]
    coeffs: CoeffSet
    frame: str | tuple[Expression, ...]  # COMOVING or 4 expressions
    reference_point: tuple[float, float, float, float]
    variation: np.ndarray | None = None          # rank-5 torsion-variation components
    matter_terms: tuple[MatterTermSpec, ...] = ()
    iz: IzSpec | None = None

    @property
    def symbols(self) -> frozenset[str]:
        return frozenset(self.coords) | frozenset(self.params)


@dataclass(frozen=True)
class MetricAtPoint:
    """All 16 metric components with derivatives, decomposed at one point.

    ``*_grad`` arrays are indexed ``[i, j, k] = d_k g_ij`` and ``*_hess``
    arrays ``[i, j, k, l] = d_k d_l g_ij``.
    """

    model: SpacetimeModel
    point: tuple[float, float, float, float]
    g_val: np.ndarray
    g_grad: np.ndarray
    g_hess: np.ndarray
    sym_val: np.ndarray
    sym_grad: np.ndarray
    sym_hess: np.ndarray
    anti_val: np.ndarray
    anti_grad: np.ndarray
    anti_hess: np.ndarray
    sym_inv: np.ndarray
    sym_inv_grad: np.ndarray  # [i, j, k] = d_k g^{ij}
    det: float

    @property
    def sym(self) -> SymMetricAtPoint:
        return SymMetricAtPoint(self.sym_val, self.sym_inv, self.det)


def _mirror_decompose(full: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split into symmetric/antisymmetric parts with exact mirror symmetry."""
    sym = np.array(full, dtype=float)
    anti = np.zeros_like(sym)
    for i in range(DIM):
        for j in range(i + 1, DIM):
            s = 0.5 * (full[i, j] + full[j, i])
            d = 0.5 * (full[i, j] - full[j, i])
            sym[i, j] = sym[j, i] = s
            anti[i, j] = d
            anti[j, i] = -d
    return sym, anti


def metric_at(model: SpacetimeModel, point: Sequence[float]) -> MetricAtPoint:
    """Evaluate the metric (with first and second derivatives) at a point."""
    pt = tuple(float(c) for c in point)
    if len(pt) != DIM:
        raise ModelError(f"point must have {DIM} components, got {len(pt)}")
    g_val = np.zeros((DIM, DIM))
    g_grad = np.zeros((DIM, DIM, DIM))
    g_hess = np.zeros((DIM, DIM, DIM, DIM))
    for i in range(DIM):
        for j in range(DIM):
            jet = evaluate_jet2(model.g_expr[i][j], pt, model.params, model.coords)
            g_val[i, j] = jet.value
            g_grad[i, j] = jet.grad
            g_hess[i, j] = jet.hess
    sym_val, anti_val = _mirror_decompose(g_val)
    sym_grad, anti_grad = _mirror_decompose(g_grad)
    sym_hess, anti_hess = _mirror_decompose(g_hess)
    sym_inv, det = invert_sym4(sym_val)
    # d_k (g^-1) = -g^-1 (d_k g) g^-1
    sym_inv_grad = -np.einsum("ia,abk,bj->ijk", sym_inv, sym_grad, sym_inv)
    return MetricAtPoint(model, pt, g_val, g_grad, g_hess,
                         sym_val, sym_grad, sym_hess,
                         anti_val, anti_grad, anti_hess,
                         sym_inv, sym_inv_grad, det)


# ---------------------------------------------------------------------------
# Model documents


def load_model_file(path: str | Path) -> SpacetimeModel:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise ModelError(f"cannot read model file {p}: {exc}") from exc
    return load_model(text, name=p.stem)


def load_model(document: str, name: str = "model") -> SpacetimeModel:
    """Parse and fully validate a model document.

    All expressions are parsed and identifier-checked now; the symmetric part
    must be invertible at the declared reference point.
    """
    try:
        raw = tomllib.loads(document)
    except tomllib.TOMLDecodeError as exc:
        raise ModelError(f"model document is not valid TOML: {exc}") from exc

    unknown = set(raw) - _SECTIONS
    if unknown:
        raise ModelError(f"unknown section(s) in model document: {sorted(unknown)}")

    coords = _read_coordinates(raw.get("coordinates"))
    params = _read_params(raw.get("params"))
    _check_names(coords, params)
    symbols = frozenset(coords) | frozenset(params)

    g_expr = _read_metric(raw.get("metric"), symbols)
    coeffs = _read_coefficients(raw.get("coefficients"))
    frame = _read_frame(raw.get("frame"), symbols)
    reference_point = _read_reference_point(raw.get("reference_point"))
    variation = _read_variation(raw.get("variation"))
    matter_terms = _read_matter_terms(raw.get("matter_term"), symbols)
    iz = _read_iz(raw.get("iz"), symbols)

    model = SpacetimeModel(name, coords, g_expr, params, coeffs, frame,
                           reference_point, variation, matter_terms, iz)
    # Load-time sanity: the symmetric part must be invertible at the
    # reference point, and every expression must evaluate there.
    metric_at(model, reference_point)
    if iz is not None:
        _check_iz_antisymmetry(model)
    return model


def _expect_table(value, section: str) -> dict:
    if not isinstance(value, dict):
        raise ModelError(f"section [{section}] must be a table")
    return value


def _only_keys(table: dict, allowed: set[str], section: str):
    unknown = set(table) - allowed
    if unknown:
        raise ModelError(f"unknown key(s) in [{section}]: {sorted(unknown)}")


def _read_coordinates(section) -> tuple[str, str, str, str]:
    if section is None:
        return ("t", "x", "y", "z")
    table = _expect_table(section, "coordinates")
    _only_keys(table, {"names"}, "coordinates")
    names = table.get("names")
    if (not isinstance(names, list) or len(names) != DIM
            or not all(isinstance(n, str) for n in names)):
        raise ModelError("[coordinates] names must be a list of 4 identifier strings")
    if len(set(names)) != DIM:
        raise ModelError("[coordinates] names must be distinct")
    return tuple(names)  # type: ignore[return-value]


def _read_params(section) -> dict[str, float]:
    if section is None:
        return {}
    table = _expect_table(section, "params")
    params: dict[str, float] = {}
    for key, value in table.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ModelError(f"[params] {key} must be a number")
        params[key] = float(value)
    return params


def _check_names(coords: Sequence[str], params: Mapping[str, float]):
    for name in list(coords) + list(params):
        if name in FUNCTIONS:
            raise ModelError(f"identifier '{name}' collides with a built-in function name")
        if not name.isidentifier():
            raise ModelError(f"'{name}' is not a valid identifier")
    overlap = set(coords) & set(params)
    if overlap:
        raise ModelError(f"names declared both as coordinate and parameter: {sorted(overlap)}")


def _parse_component(src, symbols: frozenset[str], where: str) -> Expression:
    if not isinstance(src, str):
        raise ModelError(f"{where} must be an expression string, got {type(src).__name__}")
    try:
        return parse_expression(src, symbols)
    except ModelError as exc:
        raise ModelError(f"{where}: {exc}") from exc


def _read_metric(section, symbols: frozenset[str]) -> tuple[tuple[Expression, ...], ...]:
    if section is None:
        raise ModelError("missing [metric] section")
    table = _expect_table(section, "metric")
    _only_keys(table, {"g"}, "metric")
    g = table.get("g")
    if g is None:
        raise ModelError("[metric] must declare g")
    if not isinstance(g, list) or len(g) != DIM or any(
            not isinstance(row, list) or len(row) != DIM for row in g):
        raise ModelError("[metric] g must be a 4x4 matrix of expression strings")
    rows = []
    for i, row in enumerate(g):
        rows.append(tuple(_parse_component(src, symbols, f"metric g[{i}][{j}]")
                          for j, src in enumerate(row)))
    return tuple(rows)


def _read_coefficients(section) -> CoeffSet:
    if section is None:
        return CoeffSet()
    table = _expect_table(section, "coefficients")
    _only_keys(table, {"u", "u1", "v", "v1", "w"}, "coefficients")
    values = {}
    for key, value in table.items():
        if not isinstance(value, (int, float)) or isinstance(value, bool):
            raise ModelError(f"[coefficients] {key} must be a number")
        values[key] = float(value)
    return CoeffSet(**values)


def _read_frame(section, symbols: frozenset[str]):
    if section is None:
        return COMOVING
    table = _expect_table(section, "frame")
    _only_keys(table, {"comoving", "u"}, "frame")
    if "comoving" in table and "u" in table:
        raise ModelError("[frame] declares both comoving and an explicit u vector")
    if "u" in table:
        u = table["u"]
        if not isinstance(u, list) or len(u) != DIM:
            raise ModelError("[frame] u must be a list of 4 expression strings")
        return tuple(_parse_component(src, symbols, f"frame u[{k}]")
                     for k, src in enumerate(u))
    if table.get("comoving") is not True:
        raise ModelError("[frame] must declare either comoving = true or u = [...]")
    return COMOVING


def _read_reference_point(section) -> tuple[float, float, float, float]:
    if section is None:
        return (1.0, 1.0, 1.0, 1.0)
    table = _expect_table(section, "reference_point")
    _only_keys(table, {"point"}, "reference_point")
    point = table.get("point")
    if (not isinstance(point, list) or len(point) != DIM
            or any(isinstance(c, bool) or not isinstance(c, (int, float)) for c in point)):
        raise ModelError("[reference_point] point must be a list of 4 numbers")
    return tuple(float(c) for c in point)  # type: ignore[return-value]


def _parse_indices(key: str, prefix: str, count: int, section: str) -> tuple[int, ...]:
    if not (key.startswith(prefix + "[") and key.endswith("]")):
        raise ModelError(f"unknown key '{key}' in [{section}]; expected "
                         f"'{prefix}[i0,...,i{count - 1}]'")
    body = key[len(prefix) + 1:-1]
    parts = [p.strip() for p in body.split(",")]
    if len(parts) != count:
        raise ModelError(f"key '{key}' in [{section}] must carry {count} indices")
    try:
        idx = tuple(int(p) for p in parts)
    except ValueError:
        raise ModelError(f"key '{key}' in [{section}] has non-integer indices") from None
    if any(not 0 <= k < DIM for k in idx):
        raise ModelError(f"key '{key}' in [{section}] has indices outside 0..3")
    return idx


def _read_variation(section) -> np.ndarray | None:
    if section is None:
        return None
    table = _expect_table(section, "variation")
    v = np.zeros((DIM,) * 5)
    for key, value in table.items():
        idx = _parse_indices(key, "v", 5, "variation")
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ModelError(f"[variation] {key} must be a number")
        v[idx] = float(value)
    return v


def _read_matter_terms(section, symbols: frozenset[str]) -> tuple[MatterTermSpec, ...]:
    if section is None:
        return ()
    if not isinstance(section, list):
        raise ModelError("[[matter_term]] must be an array of tables")
    terms = []
    for k, entry in enumerate(section):
        table = _expect_table(entry, f"matter_term #{k}")
        _only_keys(table, {"label", "alpha", "L", "V"}, f"matter_term #{k}")
        label = table.get("label", f"term{k}")
        if not isinstance(label, str):
            raise ModelError(f"matter_term #{k}: label must be a string")
        alpha = table.get("alpha", 1.0)
        if isinstance(alpha, bool) or not isinstance(alpha, (int, float)):
            raise ModelError(f"matter_term #{k}: alpha must be a number")
        lagr = _parse_component(table.get("L", "0"), symbols, f"matter_term #{k} L")
        v = table.get("V")
        if (not isinstance(v, list) or len(v) != DIM
                or any(not isinstance(row, list) or len(row) != DIM for row in v)):
            raise ModelError(f"matter_term #{k}: V must be a 4x4 matrix of expression strings")
        v_expr = tuple(tuple(_parse_component(src, symbols, f"matter_term #{k} V[{i}][{j}]")
                             for j, src in enumerate(row))
                       for i, row in enumerate(v))
        terms.append(MatterTermSpec(label, float(alpha), lagr, v_expr))
    return tuple(terms)


def _read_iz(section, symbols: frozenset[str]) -> IzSpec | None:
    if section is None:
        return None
    table = _expect_table(section, "iz")
    mode = table.get("metricity_mode", "assume_zero")
    if mode not in ("assume_zero", "fixed_point"):
        raise ModelError(f"[iz] metricity_mode must be 'assume_zero' or 'fixed_point', "
                         f"got {mode!r}")
    torsion: dict[tuple[int, int, int], Expression] = {}
    variation: dict[tuple[int, int], Expression] = {}
    for key, value in table.items():
        if key == "metricity_mode":
            continue
        if key == "variation":
            sub = _expect_table(value, "iz.variation")
            for vkey, vval in sub.items():
                idx2 = _parse_indices(vkey, "V", 2, "iz.variation")
                if isinstance(vval, (int, float)) and not isinstance(vval, bool):
                    vval = repr(float(vval))
                variation[idx2] = _parse_component(vval, symbols, f"iz.variation {vkey}")
            continue
        idx = _parse_indices(key, "T", 3, "iz")
        if idx[1] == idx[2]:
            raise ModelError(f"[iz] {key}: torsion components with equal last two "
                             f"indices are identically zero and may not be declared")
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            value = repr(float(value))
        torsion[idx] = _parse_component(value, symbols, f"iz {key}")
    return IzSpec(mode, torsion, variation)


def _check_iz_antisymmetry(model: SpacetimeModel):
    """Validate declared torsion antisymmetry in (j, k) at the reference point."""
    from .exprjet import evaluate_value
    iz = model.iz
    assert iz is not None
    for (i, j, k), expr in iz.torsion.items():
        mirror = iz.torsion.get((i, k, j))
        if mirror is None:
            continue
        a = evaluate_value(expr, model.reference_point, model.params, model.coords)
        b = evaluate_value(mirror, model.reference_point, model.params, model.coords)
        if abs(a + b) > 1e-12 * max(1.0, abs(a), abs(b)):
            raise ModelError(
                f"[iz] torsion components T[{i},{j},{k}] and T[{i},{k},{j}] are not "
                f"antisymmetric at the reference point ({a:.6g} vs {b:.6g})")


def model_from_components(name: str,
                          g: Sequence[Sequence[str]],
                          *,
                          coords: Sequence[str] = ("t", "x", "y", "z"),
                          params: Mapping[str, float] | None = None,
                          coeffs: CoeffSet = CoeffSet(),
                          frame=COMOVING,
                          reference_point: Sequence[float] = (1.0, 1.0, 1.0, 1.0),
                          variation: np.ndarray | None = None,
                          iz: IzSpec | None = None) -> SpacetimeModel:
    """Build a model directly from component expression strings."""
    params = dict(params or {})
    _check_names(coords, params)
    symbols = frozenset(coords) | frozenset(params)
    g_expr = tuple(tuple(_parse_component(src, symbols, f"g[{i}][{j}]")
                         for j, src in enumerate(row))
                   for i, row in enumerate(g))
    if len(g_expr) != DIM or any(len(r) != DIM for r in g_expr):
        raise ModelError("metric must be 4x4")
    if frame != COMOVING:
        frame = tuple(_parse_component(src, symbols, f"frame u[{k}]")
                      for k, src in enumerate(frame))
    model = SpacetimeModel(name, tuple(coords), g_expr, params, coeffs, frame,
                           tuple(float(c) for c in reference_point), variation, (), iz)
    metric_at(model, model.reference_point)
    return model


def model_summary(model: SpacetimeModel) -> dict:
    """JSON-ready description of a loaded model."""
    return {
        "name": model.name,
        "coordinates": list(model.coords),
        "metric": [[to_source(e) for e in row] for row in model.g_expr],
        "params": dict(model.params),
        "coefficients": model.coeffs.as_dict(),
        "frame": "comoving" if model.frame == COMOVING
                 else [to_source(e) for e in model.frame],
        "reference_point": list(model.reference_point),
    }
