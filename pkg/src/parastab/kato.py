"""Quantitative diagnostics for Kato operators.

Every strongly accretive matrix operator is a Kato operator, so nothing here
returns a yes/no verdict on that question.  What survives discretization are
the constants: the A-Kato constants c1 <= c3 <= c2 of a scalar product b,
the quasi-symmetry constants (alpha, beta) of A, and the norm-equivalence
ratios of A^(1/2) between V and H.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import minimize_scalar

from .forms import (
    HilbertMetric,
    OperatorMatrix,
    PositiveTypeOperator,
    SesquilinearForm,
    adjoint_operator,
    associated_operator,
    form_constants,
    form_of,
    hermitian_part,
    symmetrized_form,
)
from .fracpow import ImaginaryPowerBoundError, fractional_power, imaginary_power_norm, j_isometry

THETA_GRID = 720


@dataclass(frozen=True)
class KatoConstants:
    c1: float
    c2: float
    c3: float
    # Kato polarization: |t(u, v)| <= 2 sup|t(u, u)| for any sesquilinear t
    c2_polarization: float = field(default=math.nan)

    @property
    def is_kato(self) -> bool:
        return self.c1 > 0


@dataclass(frozen=True)
class QuasiSymmetryReport:
    alpha_best: float
    beta: float
    M: float

    @property
    def quasi_symmetric(self) -> bool:
        return self.alpha_best > -1


def numerical_radius(t: np.ndarray, grid: int = THETA_GRID) -> float:
    """max |x^H T x| over unit x, by sweeping rotated Hermitian parts.

    A 720-point theta grid locates the maximizing rotation, which is then
    refined by a bounded scalar search on the neighbouring grid cell.
    """
    t = np.asarray(t, dtype=complex)

    def top(theta):
        return float(np.linalg.eigvalsh(hermitian_part(np.exp(1j * theta) * t))[-1])

    thetas = np.linspace(0.0, 2 * math.pi, grid, endpoint=False)
    vals = np.array([top(th) for th in thetas])
    k = int(np.argmax(vals))
    h = thetas[1] - thetas[0]
    res = minimize_scalar(lambda th: -top(th), bounds=(thetas[k] - h, thetas[k] + h),
                          method="bounded", options={"xatol": 1e-13})
    return max(float(vals[k]), -float(res.fun))


def _require_inner_product(b: SesquilinearForm):
    if not b.is_hermitian:
        raise ValueError("b must be Hermitian")
    lam = np.linalg.eigvalsh(hermitian_part(b.coeff))
    if lam[0] <= 0:
        raise ValueError(f"b must be positive definite (smallest eigenvalue {lam[0]:.6g})")


def kato_operator_array(b: SesquilinearForm, op: PositiveTypeOperator, scale: float = 0.0) -> np.ndarray:
    """Array T with b(u, A^{-1} v) = <T x, y>, x = A^scale u, y = A^scale v, in op's metric."""
    g = op.metric.gram
    a = op.entries
    try:
        ainv = np.linalg.inv(a)
    except np.linalg.LinAlgError as exc:
        raise ValueError("operator is singular") from exc
    core = ainv.conj().T @ b.coeff
    if scale != 0:
        p = fractional_power(op, -scale).entries
        core = p.conj().T @ core @ p
    return np.linalg.solve(g, core)


def akato_constants(b: SesquilinearForm, op: PositiveTypeOperator, scale: float = 0.0) -> KatoConstants:
    """Constants of b as an A-Kato scalar product.

    c1 = inf Re b(u, A^{-1}u)/|u|^2, c2 = sup |b(u, A^{-1}v)|/(|u||v|),
    c3 = sup |b(u, A^{-1}u)|/|u|^2, where |u| is the H_scale norm |A^scale u|.
    """
    _require_inner_product(b)
    t = op.metric.to_euclidean(kato_operator_array(b, op, scale))
    c1 = float(np.linalg.eigvalsh(hermitian_part(t))[0])
    c2 = float(np.linalg.norm(t, 2))
    c3 = numerical_radius(t)
    return KatoConstants(c1, c2, c3, 2 * c3)


def quasi_symmetry(op: PositiveTypeOperator, M: float = 0.0) -> QuasiSymmetryReport:
    """Best alpha in Re<(A*)^{-1}(A + M)u, u> >= alpha|u|^2 and beta = |(A*)^{-1} A|."""
    if M < 0:
        raise ValueError("M must be nonnegative")
    a_star = adjoint_operator(op).entries
    x = np.linalg.solve(a_star, op.entries)
    xm = x + M * np.linalg.inv(a_star)
    metric = op.metric
    alpha = float(np.linalg.eigvalsh(hermitian_part(metric.to_euclidean(xm)))[0])
    beta = metric.op_norm(x)
    return QuasiSymmetryReport(alpha, beta, float(M))


def shifted_product(op: PositiveTypeOperator, M: float = 0.0) -> SesquilinearForm:
    """b_M built from the form that generates ``op`` in its own metric."""
    return symmetrized_form(form_of(op), M, op.metric).form


def verify_constant_relation(op: PositiveTypeOperator, M: float = 0.0) -> float:
    """|2 c1(b_M) - (1 + alpha_best(M))|, zero up to rounding."""
    alpha = quasi_symmetry(op, M).alpha_best
    c1 = akato_constants(shifted_product(op, M), op).c1
    return abs(2 * c1 - (1 + alpha))


def sqrt_scalar_product(op: PositiveTypeOperator) -> SesquilinearForm:
    """b(u, v) = <A^{1/2} u, A^{1/2} v>_H."""
    r = fractional_power(op, 0.5).entries
    coeff = hermitian_part(r.conj().T @ op.metric.gram @ r)
    return SesquilinearForm(coeff, op.metric)


def acl_form(b: SesquilinearForm, op: PositiveTypeOperator) -> SesquilinearForm:
    """The form (u, v) -> b(u, A^{-1} v) on H."""
    _require_inner_product(b)
    coeff = np.linalg.solve(op.entries, np.eye(op.dim)).conj().T @ b.coeff
    return SesquilinearForm(coeff, op.metric)


def transport_product(b: SesquilinearForm, op: PositiveTypeOperator, alpha: float, beta: float) -> SesquilinearForm:
    """B(u, v) = b(Ju, Jv) with J: H_{beta+1/2} -> H_{alpha+1/2} isometric.

    Constants of B measured in H_beta equal those of b measured in H_alpha.
    """
    if alpha == beta:
        return b
    j = j_isometry(op, beta + 0.5, alpha + 0.5).entries
    coeff = hermitian_part(j.conj().T @ b.coeff @ j)
    return SesquilinearForm(coeff, b.metric)


def norm_equivalence(op: PositiveTypeOperator, v_metric: HilbertMetric) -> tuple[float, float]:
    """Extremal ratios |A^{1/2}u|_H / |u|_V."""
    r = fractional_power(op, 0.5).entries
    energy = hermitian_part(r.conj().T @ op.metric.gram @ r)
    lam = sla.eigh(energy, v_metric.gram, eigvals_only=True)
    return math.sqrt(max(lam[0], 0.0)), math.sqrt(lam[-1])


def x_metric(b: SesquilinearForm, op: PositiveTypeOperator) -> HilbertMetric:
    """Metric b(A^{-1}u, A^{-1}v) on V' (coordinates via the H pairing)."""
    ainv = np.linalg.inv(op.entries)
    return HilbertMetric(hermitian_part(ainv.conj().T @ b.coeff @ ainv))


@dataclass
class BatteryItem:
    id: str
    description: str
    constants: dict
    thresholds: dict = field(default_factory=dict)
    passed: bool = True


def kato_battery(form: SesquilinearForm, h_metric: HilbertMetric | None = None,
                 s_values=(-1.0, -0.5, -0.25, 0.25, 0.5, 1.0)) -> list[BatteryItem]:
    """Run the equivalence checks for a form and report their constants."""
    h_metric = h_metric or HilbertMetric.euclidean(form.dim)
    c, C = form_constants(form)
    op = associated_operator(form, h_metric)
    items = [BatteryItem("form", "accretivity and continuity constants", {"c": c, "C": C},
                         {"c": "> 0"}, c > 0)]

    lo, hi = norm_equivalence(op, form.metric)
    items.append(BatteryItem(
        "ii", "A^(1/2): V -> H norm equivalence, lo|u|_V <= |A^(1/2)u|_H <= hi|u|_V",
        {"ratio_min": lo, "ratio_max": hi, "C1": 1 / hi, "C2": 1 / lo},
        {"ratio_min": "> 0"}, lo > 0))

    b = sqrt_scalar_product(op)
    k = akato_constants(b, op)
    # Re b(u, A^{-1}u) = Re a(v, v) >= c|v|_V^2 >= c C1^2 |u|^2 with v = A^{-1/2}u
    c1_floor = c / hi**2
    c3_ceiling = C / lo**2
    items.append(BatteryItem(
        "iii", "b = <A^(1/2).,A^(1/2).> is an A-Kato scalar product",
        asdict(k) | {"c1_floor": c1_floor, "c3_ceiling": c3_ceiling},
        {"c1": "> 0", "c1 >= c1_floor": "1e-10", "c3 <= c3_ceiling": "1e-10"},
        k.c1 > 0 and k.c1 >= c1_floor - 1e-10 and k.c3 <= c3_ceiling + 1e-10))

    xm = x_metric(b, op)
    norms = {}
    ok = True
    for s in s_values:
        try:
            norms[f"s={s:g}"] = imaginary_power_norm(op, s, xm)
        except ImaginaryPowerBoundError as exc:
            norms[f"s={s:g}"] = exc.norm
            ok = False
    items.append(BatteryItem(
        "v", "imaginary powers of the form operator in the X^{a,b} metric",
        norms, {"bound": "exp(pi|s|/2) + 1e-10"}, ok))

    acl = OperatorMatrix(np.linalg.solve(h_metric.gram, form.coeff), h_metric)
    dev = float(np.abs(acl.entries - op.entries).max())
    items.append(BatteryItem(
        "vii", "A_{-1/2} and the form operator V -> V' share one coordinate array",
        {"max_entry_deviation": dev}, {"max_entry_deviation": "== 0"}, dev == 0.0))

    q = quasi_symmetry(op, 0.0)
    items.append(BatteryItem(
        "quasi", "quasi-symmetry constants at M = 0",
        # sufficient, not necessary, for the Kato property: recorded, not gated
        {"alpha_best": q.alpha_best, "beta": q.beta, "quasi_symmetric": q.quasi_symmetric}))
    return items
