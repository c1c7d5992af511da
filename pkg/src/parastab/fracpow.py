"""Holomorphic functional calculus for positive-type matrices.

Powers A^alpha use the principal logarithm (cut on (-inf, 0]).  Evaluation
goes through an eigendecomposition when the eigenvector basis is well
conditioned and through a blocked Schur-Parlett recurrence otherwise.  In
finite dimension the negative-order scale spaces H_alpha are the same set as
H; only their norms |A^alpha u| differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .forms import HilbertMetric, OperatorMatrix, PositiveTypeOperator, SpectrumError, distance_to_cut

COND_LIMIT = 1e8
CLUSTER_RTOL = 1e-8
RECON_RTOL = 1e-10


class IllConditionedError(ValueError):
    """Eigenvector basis too ill-conditioned and no Schur fallback allowed."""


class ImaginaryPowerBoundError(ArithmeticError):
    def __init__(self, s, norm, bound):
        super().__init__(f"|A^(i*{s})| = {norm:.12g} exceeds exp(pi|s|/2) = {bound:.12g} at s = {s}")
        self.s = s
        self.norm = norm
        self.bound = bound


# -- scalar functions ------------------------------------------------------

class Power:
    """z -> exp(alpha Log z)."""

    def __init__(self, alpha):
        self.alpha = complex(alpha)

    def __call__(self, z):
        return np.exp(self.alpha * np.log(np.asarray(z, dtype=complex)))

    def taylor(self, sigma, k):
        # binom(alpha, k) sigma^(alpha - k)
        c = 1.0 + 0j
        for j in range(k):
            c *= (self.alpha - j) / (j + 1)
        return c * np.exp((self.alpha - k) * np.log(complex(sigma)))


class Exponential:
    """z -> exp(-t z)."""

    def __init__(self, t):
        self.t = float(t)

    def __call__(self, z):
        return np.exp(-self.t * np.asarray(z, dtype=complex))

    def taylor(self, sigma, k):
        return (-self.t) ** k / math.factorial(k) * np.exp(-self.t * complex(sigma))


# -- decompositions ----------------------------------------------------------

@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    kind: str
    eigenvalues: np.ndarray
    vecs: np.ndarray | None = None
    vecs_inv: np.ndarray | None = None
    cond: float = 1.0
    schur_t: np.ndarray | None = None
    schur_z: np.ndarray | None = None
    blocks: tuple = ()


def _eig(op: OperatorMatrix):
    if op.is_self_adjoint:
        g = op.metric.gram
        w, v = sla.eigh(op.metric.gram @ op.entries, g)
        # v^H G v = I
        return w.astype(complex), v.astype(complex), v.conj().T @ g, 1.0
    w, v = np.linalg.eig(op.entries)
    cond = float(np.linalg.cond(v))
    if not np.isfinite(cond):
        return w, v, None, math.inf
    return w, v, np.linalg.inv(v), cond


def decompose(op: OperatorMatrix, kind: str | None = None) -> SpectralDecomposition:
    """Eigen- or Schur decomposition; ``kind=None`` picks by conditioning."""
    a = op.entries
    scale = max(np.linalg.norm(a), 1e-300)
    if kind in (None, "diagonalizable"):
        w, v, vinv, cond = _eig(op)
        if cond <= COND_LIMIT:
            err = np.linalg.norm(v @ (w[:, None] * vinv) - a)
            if err <= RECON_RTOL * scale:
                return SpectralDecomposition("diagonalizable", w, v, vinv, cond)
        if kind == "diagonalizable":
            raise IllConditionedError(f"eigenvector condition number {cond:.3g} exceeds {COND_LIMIT:g}")
    t, z = sla.schur(np.asarray(a, dtype=complex), output="complex")
    t, z, blocks = _cluster_schur(t, z)
    if np.linalg.norm(z @ t @ z.conj().T - a) > RECON_RTOL * scale:
        raise SpectrumError("Schur reconstruction failed")
    return SpectralDecomposition("schur", np.diag(t).copy(), schur_t=t, schur_z=z, blocks=blocks)


def _close(a, b):
    return abs(a - b) <= CLUSTER_RTOL * max(abs(a), abs(b))


def _cluster_schur(t, z):
    """Reorder a complex Schur form so that confluent eigenvalues are contiguous."""
    n = t.shape[0]
    lam = np.diag(t).copy()
    labels = list(range(n))
    for i in range(n):
        for j in range(i):
            if _close(lam[i], lam[j]):
                old, new = labels[i], labels[j]
                labels = [new if x == old else x for x in labels]
    order = []
    for lab in labels:
        if lab not in order:
            order.append(lab)
    target = sorted(range(n), key=lambda i: order.index(labels[i]))
    current = list(labels)
    desired = [labels[i] for i in target]
    for p in range(n):
        if current[p] == desired[p]:
            continue
        q = next(k for k in range(p + 1, n) if current[k] == desired[p])
        t, z, info = lapack.ztrexc(t, z, q + 1, p + 1)
        if info != 0:
            raise SpectrumError("Schur reordering failed")
        current.insert(p, current.pop(q))
    blocks = []
    start = 0
    for p in range(1, n + 1):
        if p == n or current[p] != current[start]:
            blocks.append((start, p))
            start = p
    return np.triu(t), z, tuple(blocks)


def _taylor_block(tb, fn, max_terms=200):
    m = tb.shape[0]
    sigma = np.trace(tb) / m
    nmat = tb - sigma * np.eye(m)
    out = fn.taylor(sigma, 0) * np.eye(m, dtype=complex)
    power = np.eye(m, dtype=complex)
    small = 0
    for k in range(1, max_terms):
        power = power @ nmat
        term = fn.taylor(sigma, k) * power
        out = out + term
        if k >= m and np.linalg.norm(term) <= 1e-17 * max(np.linalg.norm(out), 1e-300):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    return out


def schur_parlett(t: np.ndarray, blocks, fn) -> np.ndarray:
    """f(T) for upper-triangular T whose diagonal blocks hold eigenvalue clusters."""
    n = t.shape[0]
    f = np.zeros((n, n), dtype=complex)
    sl = [slice(a, b) for a, b in blocks]
    for s in sl:
        if s.stop - s.start == 1:
            f[s, s] = fn(t[s, s])
        else:
            f[s, s] = _taylor_block(t[s, s], fn)
    nb = len(sl)
    for j in range(1, nb):
        sj = sl[j]
        for i in range(j - 1, -1, -1):
            si = sl[i]
            rhs = f[si, si] @ t[si, sj] - t[si, sj] @ f[sj, sj]
            for k in range(i + 1, j):
                sk = sl[k]
                rhs = rhs + f[si, sk] @ t[sk, sj] - t[si, sk] @ f[sk, sj]
            f[si, sj] = sla.solve_sylvester(t[si, si], -t[sj, sj], rhs)
    return f


def matrix_function(op: PositiveTypeOperator, fn, method: str = "auto") -> np.ndarray:
    """Array of f(A) for a scalar function object ``fn``."""
    if method == "auto":
        dec = op.decomposition
    elif method == "eig":
        dec = op.decomposition
        if dec.kind != "diagonalizable":
            raise IllConditionedError(
                f"eigenvector condition number exceeds {COND_LIMIT:g}; use method='auto' or 'schur'")
    elif method == "schur":
        dec = op.schur_decomposition
    else:
        raise ValueError(f"unknown method {method!r}")
    if dec.kind == "diagonalizable":
        return dec.vecs @ (fn(dec.eigenvalues)[:, None] * dec.vecs_inv)
    f = schur_parlett(dec.schur_t, dec.blocks, fn)
    return dec.schur_z @ f @ dec.schur_z.conj().T


def _check_cut(op: PositiveTypeOperator):
    lam = op.eigenvalues
    if np.any(distance_to_cut(lam) < 1e-12):
        raise SpectrumError("eigenvalue within 1e-12 of the branch cut (-inf, 0]")


def fractional_power(op: PositiveTypeOperator, alpha, method: str = "auto") -> OperatorMatrix:
    """A^alpha on the principal branch, in the metric of ``op``."""
    _check_cut(op)
    if alpha == 0:
        return OperatorMatrix(np.eye(op.dim), op.metric)
    entries = matrix_function(op, Power(alpha), method)
    return OperatorMatrix(entries, op.metric)


def scale_norm(op: PositiveTypeOperator, alpha: float, u) -> float:
    """|u|_{H_alpha} = |A^alpha u|."""
    u = np.asarray(u, dtype=complex)
    if alpha == 0:
        return op.metric.norm(u)
    return op.metric.norm(fractional_power(op, alpha) @ u)


def j_isometry(op: PositiveTypeOperator, alpha: float, beta: float) -> OperatorMatrix:
    """Isometric isomorphism H_alpha -> H_beta, the array A^(alpha - beta)."""
    return fractional_power(op, alpha - beta)


def power_semigroup_check(op: PositiveTypeOperator, gamma: float, delta: float,
                          trials: int = 32, rng=None) -> float:
    """Largest relative deviation |A^g A^d u - A^(g+d) u| / |A^(g+d) u| over random u."""
    rng = np.random.default_rng(rng)
    ag = fractional_power(op, gamma).entries
    ad = fractional_power(op, delta).entries
    agd = fractional_power(op, gamma + delta).entries
    worst = 0.0
    for _ in range(trials):
        u = rng.standard_normal(op.dim) + 1j * rng.standard_normal(op.dim)
        ref = agd @ u
        dev = op.metric.norm(ag @ (ad @ u) - ref) / op.metric.norm(ref)
        worst = max(worst, dev)
    return worst


def imaginary_power_norm(op: PositiveTypeOperator, s: float, metric: HilbertMetric | None = None,
                         check: bool = True) -> float:
    """Operator norm of A^(is); for form-associated operators it obeys exp(pi|s|/2)."""
    metric = metric or op.metric
    norm = metric.op_norm(fractional_power(op, 1j * s).entries)
    bound = math.exp(math.pi * abs(s) / 2)
    if check and norm > bound + 1e-10:
        raise ImaginaryPowerBoundError(s, norm, bound)
    return norm
