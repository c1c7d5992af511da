"""Finite-dimensional sesquilinear forms, metrics and the operators they induce.

Vectors live in C^n.  A Hilbert metric is a positive definite Gram matrix G
with <u, v>_G = v^H G u.  A form a(u, v) = v^H M u is stored by its
coefficient array M together with the metric of the energy space V; the
Gel'fand triple V in H in V' collapses to two metrics on one coordinate
space.  The antidual V' is identified with coordinate vectors through the H
pairing, so the form operator V -> V' has the same array as the operator
associated in H.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import NamedTuple

import numpy as np
import scipy.linalg as sla

HERMITIAN_RTOL = 1e-12


class NotAccretiveError(ValueError):
    """Raised when a form fails strong accretivity (c <= 0)."""


class SpectrumError(ValueError):
    """Raised when an operator has spectrum on or too close to (-inf, 0]."""


def _as_square(a, name="matrix") -> np.ndarray:
    arr = np.array(a, dtype=complex)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be square, got shape {arr.shape}")
    return arr


def hermitian_part(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + m.conj().T)


@dataclass(frozen=True, eq=False)
class HilbertMetric:
    """Inner product <u, v> = v^H G u on C^n."""

    gram: np.ndarray

    def __post_init__(self):
        g = _as_square(self.gram, "gram")
        scale = max(np.abs(g).max(), 1.0)
        if np.abs(g - g.conj().T).max() > HERMITIAN_RTOL * scale:
            raise ValueError("metric Gram matrix is not Hermitian")
        g = hermitian_part(g)
        try:
            chol = np.linalg.cholesky(g)
        except np.linalg.LinAlgError as exc:
            raise ValueError("metric Gram matrix is not positive definite") from exc
        g.setflags(write=False)
        object.__setattr__(self, "gram", g)
        object.__setattr__(self, "_chol", chol)

    @classmethod
    def euclidean(cls, dim: int) -> "HilbertMetric":
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self.gram.shape[0]

    @property
    def chol(self) -> np.ndarray:
        """Lower factor L with G = L L^H, so |u|_G = |L^H u|_2."""
        return self._chol

    @cached_property
    def is_euclidean(self) -> bool:
        return bool(np.array_equal(self.gram, np.eye(self.dim)))

    def inner(self, u, v) -> complex:
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        return complex(v.conj() @ self.gram @ u)

    def norm(self, u) -> float:
        u = np.asarray(u, dtype=complex)
        return float(np.linalg.norm(self._chol.conj().T @ u))

    def to_euclidean(self, op: np.ndarray) -> np.ndarray:
        """Unitarily equivalent Euclidean array L^H X L^{-H} of an operator X."""
        if self.is_euclidean:
            return np.asarray(op, dtype=complex)
        lh = self._chol.conj().T
        return lh @ sla.solve_triangular(self._chol, np.asarray(op).conj().T, lower=True).conj().T

    def op_norm(self, op: np.ndarray) -> float:
        return float(np.linalg.norm(self.to_euclidean(op), 2))


@dataclass(frozen=True, eq=False)
class SesquilinearForm:
    """a(u, v) = v^H M u with the V-space metric used for its constants."""

    coeff: np.ndarray
    metric: HilbertMetric

    def __post_init__(self):
        m = _as_square(self.coeff, "coeff")
        if m.shape[0] != self.metric.dim:
            raise ValueError("form and metric dimensions differ")
        m.setflags(write=False)
        object.__setattr__(self, "coeff", m)

    @property
    def dim(self) -> int:
        return self.coeff.shape[0]

    def __call__(self, u, v) -> complex:
        u = np.asarray(u, dtype=complex)
        v = np.asarray(v, dtype=complex)
        return complex(v.conj() @ self.coeff @ u)

    @property
    def is_hermitian(self) -> bool:
        m = self.coeff
        return bool(np.abs(m - m.conj().T).max() <= HERMITIAN_RTOL * max(np.abs(m).max(), 1.0))

    def adjoint(self) -> "SesquilinearForm":
        """The form a*(u, v) = conj(a(v, u))."""
        return SesquilinearForm(self.coeff.conj().T, self.metric)


@dataclass(frozen=True, eq=False)
class OperatorMatrix:
    """A linear operator on C^n together with the metric of the space it acts on."""

    entries: np.ndarray
    metric: HilbertMetric

    def __post_init__(self):
        a = _as_square(self.entries, "entries")
        if a.shape[0] != self.metric.dim:
            raise ValueError("operator and metric dimensions differ")
        a.setflags(write=False)
        object.__setattr__(self, "entries", a)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def __matmul__(self, u):
        return self.entries @ np.asarray(u, dtype=complex)

    def norm(self) -> float:
        return self.metric.op_norm(self.entries)

    @cached_property
    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvals(self.entries)

    @cached_property
    def is_self_adjoint(self) -> bool:
        ga = self.metric.gram @ self.entries
        scale = max(np.abs(ga).max(), 1.0)
        return bool(np.abs(ga - ga.conj().T).max() <= 1e-12 * scale)


def distance_to_cut(z) -> np.ndarray:
    """Distance of complex points from the closed half-line (-inf, 0]."""
    z = np.asarray(z, dtype=complex)
    return np.where(z.real <= 0, np.abs(z.imag), np.abs(z))


class PositiveTypeOperator(OperatorMatrix):
    """Operator whose spectrum avoids (-inf, 0]; all complex powers exist.

    The spectral (or Schur) decomposition is computed lazily and cached on
    the instance; see :mod:`parastab.fracpow`.
    """

    CUT_TOL = 1e-12

    def __post_init__(self):
        super().__post_init__()
        lam = self.eigenvalues
        if np.any(distance_to_cut(lam) < self.CUT_TOL * max(1.0, np.abs(lam).max())):
            raise SpectrumError(f"spectrum touches (-inf, 0]: {lam}")

    @cached_property
    def decomposition(self):
        from .fracpow import decompose

        return decompose(self)

    @cached_property
    def schur_decomposition(self):
        from .fracpow import decompose

        return decompose(self, kind="schur")


def form_constants(form: SesquilinearForm) -> tuple[float, float]:
    """Best constants (c, C) with Re a(u,u) >= c|u|_V^2 and |a(u,v)| <= C|u|_V|v|_V."""
    g = form.metric.gram
    c = float(sla.eigh(hermitian_part(form.coeff), g, eigvals_only=True)[0])
    if c <= 0:
        raise NotAccretiveError(f"form is not strongly accretive (c = {c:.6g})")
    # v^H M u with u = L^{-H} x, v = L^{-H} y  ->  y^H L^{-1} M L^{-H} x
    l = form.metric.chol
    core = sla.solve_triangular(l, form.coeff, lower=True)
    core = sla.solve_triangular(l, core.conj().T, lower=True).conj().T
    C = float(np.linalg.norm(core, 2))
    return c, C


def associated_operator(form: SesquilinearForm, h_metric: HilbertMetric | None = None) -> PositiveTypeOperator:
    """Operator A with <Au, v>_H = a(u, v), i.e. A = G_H^{-1} M."""
    h_metric = h_metric or HilbertMetric.euclidean(form.dim)
    entries = np.linalg.solve(h_metric.gram, form.coeff)
    lam = np.linalg.eigvals(entries)
    if np.any(lam.real <= 0):
        raise SpectrumError(
            f"associated operator has eigenvalues with Re <= 0 ({lam}); "
            "form is not accretive or the problem is ill-conditioned"
        )
    return PositiveTypeOperator(entries, h_metric)


def adjoint_operator(op: OperatorMatrix) -> OperatorMatrix:
    """Hilbert adjoint A* = G^{-1} A^H G in the attached metric."""
    g = op.metric.gram
    entries = np.linalg.solve(g, op.entries.conj().T @ g)
    return type(op)(entries, op.metric)


class SymmetrizedForm(NamedTuple):
    form: SesquilinearForm
    min_eig: float
    positive: bool


def symmetrized_form(form: SesquilinearForm, M: float = 0.0,
                     h_metric: HilbertMetric | None = None) -> SymmetrizedForm:
    """b_M = (a + a* + M <.,.>_H) / 2, with its smallest eigenvalue against the V metric."""
    if M < 0:
        raise ValueError("shift M must be nonnegative")
    h_metric = h_metric or HilbertMetric.euclidean(form.dim)
    coeff = hermitian_part(form.coeff + 0.5 * M * h_metric.gram)
    lam = float(sla.eigh(coeff, form.metric.gram, eigvals_only=True)[0])
    return SymmetrizedForm(SesquilinearForm(coeff, form.metric), lam, lam > 0)


def form_of(op: OperatorMatrix, v_metric: HilbertMetric | None = None) -> SesquilinearForm:
    """The form a(u, v) = <Au, v>_H generating ``op`` (coefficient G_H A)."""
    return SesquilinearForm(op.metric.gram @ op.entries, v_metric or op.metric)


def dual_metric(h_metric: HilbertMetric, v_metric: HilbertMetric) -> HilbertMetric:
    """Metric of V' when functionals are represented through the H pairing."""
    g = h_metric.gram
    return HilbertMetric(hermitian_part(g @ np.linalg.solve(v_metric.gram, g)))


def random_metric(rng: np.random.Generator, dim: int, spread: float = 1.0) -> HilbertMetric:
    """Random Hermitian positive definite Gram matrix with condition number about (1 + spread)^2."""
    x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, _ = np.linalg.qr(x)
    lam = rng.uniform(1.0, 1.0 + spread, dim) ** 2
    return HilbertMetric(hermitian_part((q * lam) @ q.conj().T))


def random_accretive_form(rng: np.random.Generator, dim: int, skew: float = 1.0, floor: float = 0.1,
                          metric: HilbertMetric | None = None, real: bool = False) -> SesquilinearForm:
    """Coefficient P + N with P Hermitian positive definite and N skew-Hermitian.

    Every strongly accretive coefficient has this form; ``skew`` scales the
    non-normal part and ``floor`` bounds the Hermitian part from below.
    """
    if real:
        x = rng.standard_normal((dim, dim))
        y = rng.standard_normal((dim, dim))
    else:
        x = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
        y = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    p = x @ x.conj().T / dim + floor * np.eye(dim)
    n = skew * 0.5 * (y - y.conj().T)
    return SesquilinearForm(p + n, metric or HilbertMetric.euclidean(dim))
