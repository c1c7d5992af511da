"""Matrix semigroups e^{-tA}, smoothing constants, mild solutions and decay fits.

The integrator is the exponential trapezoidal rule for u' + Au = f(t, u),

    u_{n+1} = e^{-hA} u_n + h phi1(-hA) f_n + h phi2(-hA) (f_{n+1} - f_n),

whose implicit stage is resolved by fixed-point iteration started from the
explicit ETD2RK predictor.  phi-functions are evaluated through the cached
spectral decomposition of A.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
from scipy.integrate import solve_ivp

from .forms import PositiveTypeOperator
from .fracpow import Exponential, fractional_power, matrix_function

BLOWUP_NORM = 1e12
PHI_TAYLOR_RADIUS = 1e-4
FIXED_POINT_TOL = 1e-14
FIXED_POINT_MAXITER = 50


class BlowUpError(ArithmeticError):
    """State left every bounded set; carries the last finite time."""

    def __init__(self, t_last: float, norm: float):
        super().__init__(f"solution blew up after t = {t_last:.17g} (norm {norm:.3g})")
        self.t_last = t_last
        self.norm = norm


@dataclass
class MildProblem:
    A: PositiveTypeOperator
    f: Callable[[np.ndarray, float], np.ndarray] | None
    u0: np.ndarray
    t0: float = 0.0
    t1: float = 1.0
    step: float = 0.01
    record_every: int = 1

    def __post_init__(self):
        self.u0 = np.asarray(self.u0, dtype=complex).reshape(-1)
        if self.u0.shape[0] != self.A.dim:
            raise ValueError("u0 and A dimensions differ")
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1")
        if not 0 < self.step <= self.t1 - self.t0:
            raise ValueError("step must lie in (0, t1 - t0]")
        if self.record_every < 1:
            raise ValueError("record_every must be >= 1")

    def rhs(self, u, t):
        if self.f is None:
            return np.zeros_like(u)
        return np.asarray(self.f(u, t), dtype=complex)


@dataclass
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    norms: dict = field(default_factory=dict)
    error_estimate: float | None = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.states = np.asarray(self.states, dtype=complex)
        if self.states.ndim == 1:
            self.states = self.states[:, None]
        if self.states.shape[0] != self.times.shape[0]:
            raise ValueError("times and states lengths differ")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("times must be strictly increasing")
        for k, v in self.norms.items():
            if len(v) != len(self.times):
                raise ValueError(f"norm sequence {k!r} has wrong length")

    def __len__(self):
        return len(self.times)

    def with_norms(self, op: PositiveTypeOperator, alphas=(0.0,)) -> "Trajectory":
        """Attach |A^alpha u(t)|_H for each alpha."""
        norms = dict(self.norms)
        l_h = op.metric.chol.conj().T
        for a in alphas:
            p = np.eye(op.dim) if a == 0 else fractional_power(op, a).entries
            norms[float(a)] = np.linalg.norm((l_h @ p @ self.states.T), axis=0)
        return Trajectory(self.times, self.states, norms, self.error_estimate)

    def to_csv(self, alpha: float | None = None) -> str:
        """Header t,re(u_1),im(u_1),...,norm_alpha with 17 significant digits."""
        n = self.states.shape[1]
        header = ["t"]
        for i in range(1, n + 1):
            header += [f"re(u_{i})", f"im(u_{i})"]
        if alpha is not None:
            header.append(f"norm_{alpha:g}")
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(header)
        for k, t in enumerate(self.times):
            row = [_fmt(t)]
            for z in self.states[k]:
                row += [_fmt(z.real), _fmt(z.imag)]
            if alpha is not None:
                row.append(_fmt(self.norms[float(alpha)][k]))
            w.writerow(row)
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "Trajectory":
        rows = list(csv.reader(io.StringIO(text)))
        header, body = rows[0], np.array([[float(x) for x in r] for r in rows[1:] if r])
        if header[0] != "t":
            raise ValueError("first CSV column must be 't'")
        ncomp = sum(1 for h in header if h.startswith("re("))
        states = body[:, 1:1 + 2 * ncomp:2] + 1j * body[:, 2:2 + 2 * ncomp:2]
        norms = {}
        if len(header) > 1 + 2 * ncomp:
            name = header[1 + 2 * ncomp]
            if not name.startswith("norm_"):
                raise ValueError(f"unexpected column {name!r}")
            norms[float(name[5:])] = body[:, 1 + 2 * ncomp]
        return cls(body[:, 0], states, norms)


def _fmt(x: float) -> str:
    x = float(x)
    if x == 0:
        return "0"
    return f"{x:.17g}"


def semigroup_apply(op: PositiveTypeOperator, t: float, u) -> np.ndarray:
    """e^{-tA} u."""
    if t < 0:
        raise ValueError("the semigroup is only defined for t >= 0")
    u = np.asarray(u, dtype=complex)
    if t == 0:
        return u.copy()
    return matrix_function(op, Exponential(t)) @ u


def smoothing_profile(op: PositiveTypeOperator, alpha: float, t_grid) -> np.ndarray:
    """t^alpha |A^alpha e^{-tA}| at every grid point."""
    t_grid = np.asarray(t_grid, dtype=float)
    if t_grid.size == 0:
        raise ValueError("t_grid is empty")
    if np.any(t_grid <= 0):
        raise ValueError("t_grid must be positive")
    if not 0 <= alpha <= 1:
        raise ValueError("alpha must lie in [0, 1]")
    dec = op.decomposition
    if op.is_self_adjoint and dec.kind == "diagonalizable":
        lam = dec.eigenvalues.real
        # the norm is attained on an eigenvector: max_k lam_k^alpha e^{-t lam_k}
        vals = np.max(lam[None, :] ** alpha * np.exp(-np.outer(t_grid, lam)), axis=1)
        return t_grid ** alpha * vals
    p = fractional_power(op, alpha).entries if alpha else np.eye(op.dim)
    out = np.empty(t_grid.size)
    for i, t in enumerate(t_grid):
        out[i] = t ** alpha * op.metric.op_norm(p @ matrix_function(op, Exponential(t)))
    return out


def smoothing_constant(op: PositiveTypeOperator, alpha: float, t_grid) -> float:
    """max over the grid of t^alpha |A^alpha e^{-tA}|."""
    return float(np.max(smoothing_profile(op, alpha, t_grid)))


# -- phi functions ---------------------------------------------------------

class Phi:
    """phi_k(-h z) for z in the spectrum of A, with small-argument series."""

    def __init__(self, k: int, h: float):
        self.k = k
        self.h = float(h)

    def _scalar(self, w):
        # phi_k(w) = sum_j w^j / (j + k)!
        if abs(w) < PHI_TAYLOR_RADIUS:
            return sum(w ** j / math.factorial(j + self.k) for j in range(6))
        if self.k == 1:
            return np.expm1(w) / w
        return (np.expm1(w) - w) / (w * w)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.empty_like(z)
        for i, zi in np.ndenumerate(z):
            out[i] = self._scalar(-self.h * zi)
        return out


def _phi_arrays(op: PositiveTypeOperator, h: float):
    dec = op.decomposition
    if dec.kind == "diagonalizable":
        e = matrix_function(op, Exponential(h))
        p1 = matrix_function(op, Phi(1, h))
        p2 = matrix_function(op, Phi(2, h))
        return e, p1, p2
    # defective spectrum: exact phi-functions from one augmented exponential
    n = op.dim
    big = np.zeros((n + 2 * n, n + 2 * n), dtype=complex)
    big[:n, :n] = -h * op.entries
    big[:n, n:2 * n] = np.eye(n)
    big[n:2 * n, 2 * n:] = np.eye(n)
    ex = sla.expm(big)
    return ex[:n, :n], ex[:n, n:2 * n], ex[:n, 2 * n:]


def _integrate(problem: MildProblem, h: float, nsteps: int, record_every: int):
    # overflow on the way to blow-up is detected below, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        return _integrate_steps(problem, h, nsteps, record_every)


def _integrate_steps(problem: MildProblem, h: float, nsteps: int, record_every: int):
    e, p1, p2 = _phi_arrays(problem.A, h)
    hp1, hp2 = h * p1, h * p2
    metric = problem.A.metric
    u = problem.u0.copy()
    t = problem.t0
    f_n = problem.rhs(u, t)
    times = [t]
    states = [u.copy()]
    linear = problem.f is None
    for n in range(1, nsteps + 1):
        t_next = problem.t0 + n * h
        base = e @ u + hp1 @ f_n
        if linear:
            u_next = base
            f_next = f_n
        else:
            # ETD2RK predictor, then fixed point of the trapezoidal stage
            u_next = base
            f_next = problem.rhs(u_next, t_next)
            u_next = base + hp2 @ (f_next - f_n)
            for _ in range(FIXED_POINT_MAXITER):
                f_next = problem.rhs(u_next, t_next)
                cand = base + hp2 @ (f_next - f_n)
                delta = np.linalg.norm(cand - u_next)
                u_next = cand
                if not np.all(np.isfinite(u_next)):
                    break
                if delta <= FIXED_POINT_TOL * max(1.0, np.linalg.norm(u_next)):
                    break
            f_next = problem.rhs(u_next, t_next)
        nrm = metric.norm(u_next) if np.all(np.isfinite(u_next)) else math.inf
        if not math.isfinite(nrm) or nrm > BLOWUP_NORM:
            raise BlowUpError(t, nrm)
        u, f_n, t = u_next, f_next, t_next
        if n % record_every == 0 or n == nsteps:
            times.append(t)
            states.append(u.copy())
    return np.array(times), np.array(states)


def _grid(problem: MildProblem, step: float):
    span = problem.t1 - problem.t0
    nsteps = max(1, int(math.ceil(span / step - 1e-9)))
    return span / nsteps, nsteps


def solve_mild(problem: MildProblem, error_estimate: bool = True) -> Trajectory:
    """Exponential trapezoidal integration of the variation-of-constants formula.

    The step is shrunk to divide the horizon evenly.  With ``error_estimate``
    the run is repeated at half the step; for a second-order method the
    returned (coarse) endpoint is off by about 4/3 of the difference.
    """
    h, nsteps = _grid(problem, problem.step)
    times, states = _integrate(problem, h, nsteps, problem.record_every)
    err = None
    if error_estimate and problem.f is not None:
        _, fine = _integrate(problem, h / 2, 2 * nsteps, 2 * nsteps)
        err = float(4 * problem.A.metric.norm(fine[-1] - states[-1]) / 3)
    elif error_estimate:
        err = 0.0
    return Trajectory(times, states, {}, err)


def solve_reference(problem: MildProblem, t_eval=None, rtol: float = 1e-10, atol: float = 1e-13) -> Trajectory:
    """Adaptive DOP853 on u' = -Au + f(t, u); intended as an oracle only."""
    a = np.asarray(problem.A.entries)
    real = not np.iscomplexobj(problem.u0) or not np.any(problem.u0.imag)
    real = real and not np.any(a.imag)

    def fun(t, y):
        u = y.astype(complex)
        out = -a @ u + problem.rhs(u, t)
        return out.real if real else out

    y0 = problem.u0.real.copy() if real else problem.u0
    if t_eval is None:
        h, nsteps = _grid(problem, problem.step)
        t_eval = problem.t0 + h * np.arange(0, nsteps + 1, problem.record_every)
        if t_eval[-1] < problem.t1 - 1e-12 * abs(problem.t1):
            t_eval = np.append(t_eval, problem.t1)
        t_eval[-1] = problem.t1

    def blowup(t, y):
        return BLOWUP_NORM - np.linalg.norm(y)

    blowup.terminal = True
    sol = solve_ivp(fun, (problem.t0, problem.t1), y0, method="DOP853", dense_output=True,
                    rtol=rtol, atol=atol, events=blowup)
    last = float(np.linalg.norm(sol.y[:, -1])) if np.all(np.isfinite(sol.y[:, -1])) else math.inf
    if sol.status == 1 or not np.all(np.isfinite(sol.y)):
        t_last = float(sol.t_events[0][0]) if sol.t_events and len(sol.t_events[0]) else float(sol.t[-1])
        raise BlowUpError(t_last, last)
    if sol.status != 0:
        # step-size collapse at finite time on a smooth rhs: a singularity
        raise BlowUpError(float(sol.t[-1]), last)
    t_eval = np.asarray(t_eval, dtype=float)
    states = sol.sol(t_eval).T
    if t_eval[-1] == problem.t1:
        states[-1] = sol.y[:, -1]
    return Trajectory(t_eval, states.astype(complex))


@dataclass(frozen=True)
class DecayFit:
    rate: float
    prefactor: float
    truncated: bool = False


def decay_fit(traj: Trajectory, norm_alpha: float = 0.0, tail_fraction: float = 0.5,
              equilibrium=None, op: PositiveTypeOperator | None = None) -> DecayFit:
    """Least-squares line through (t, log|u(t) - u_eq|_alpha) on the final samples.

    Norms come from ``traj.norms[norm_alpha]`` unless ``op`` is given, in
    which case they are recomputed from the states (needed for a nonzero
    equilibrium).  Exact zeros truncate the fit to the positive prefix and
    set ``truncated``.
    """
    if not 0 < tail_fraction < 1:
        raise ValueError("tail_fraction must lie in (0, 1)")
    if op is not None:
        shifted = traj.states if equilibrium is None else traj.states - np.asarray(equilibrium)[None, :]
        norms = Trajectory(traj.times, shifted).with_norms(op, (norm_alpha,)).norms[float(norm_alpha)]
    elif float(norm_alpha) in traj.norms:
        if equilibrium is not None and np.any(np.asarray(equilibrium) != 0):
            raise ValueError("a nonzero equilibrium needs op to recompute norms")
        norms = np.asarray(traj.norms[float(norm_alpha)], dtype=float)
    elif norm_alpha == 0:
        shifted = traj.states if equilibrium is None else traj.states - np.asarray(equilibrium)[None, :]
        norms = np.linalg.norm(shifted, axis=1)
    else:
        raise ValueError(f"no norms for alpha = {norm_alpha}; pass op")
    times = traj.times
    truncated = False
    bad = np.flatnonzero(~(norms > 0))
    if bad.size:
        truncated = True
        times, norms = times[:bad[0]], norms[:bad[0]]
    if times.size < 2:
        raise ValueError("fewer than two positive norms to fit")
    start = min(int(math.floor((1 - tail_fraction) * times.size)), times.size - 2)
    t, y = times[start:], np.log(norms[start:])
    slope, intercept = np.polyfit(t - t[0], y, 1)
    # M2 in |u(t)| ~ M2 exp(-rate (t - t0)), t0 the first sample
    prefactor = math.exp(intercept + slope * (times[0] - t[0]))
    return DecayFit(float(-slope), prefactor, truncated)
