"""Two-species reaction-diffusion on product domains: modes, stability, simulation.

The linearization of u_t = D Lap u + f(u) at 0 splits over the Laplace
eigenspaces: on the kappa-eigenspace it is the matrix kappa D - B with
B = f'(0).  Stability of every mode is a determinant condition, which for
the sign pattern b11 > 0 > b11 + b22, det B > 0 becomes the hyperbola test
in the (d1, d2) plane.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .forms import HilbertMetric, PositiveTypeOperator
from .fracpow import fractional_power
from .semigroup import MildProblem, Trajectory, decay_fit, solve_mild

GAP_BAND = 1e-8
DEALIAS = 1.5

BC_TAGS = ("dirichlet", "neumann")


class TailClosureError(ValueError):
    def __init__(self, K: int, required: int, threshold: float):
        super().__init__(f"mode cutoff K = {K} does not close the tail; need K >= {required} "
                         f"(kappa_K >= {threshold:.6g})")
        self.K = K
        self.required = required
        self.threshold = threshold


class SignConditionError(ValueError):
    pass


@dataclass(frozen=True)
class DomainSpec:
    """Interval (0, L) or rectangle (0, Lx) x (0, Ly).

    ``bc`` lists one tag per face: (left, right) for an interval and
    (x=0, x=Lx, y=0, y=Ly) for a rectangle.
    """

    kind: str
    lengths: tuple
    bc: tuple

    def __post_init__(self):
        lengths = tuple(float(x) for x in np.atleast_1d(self.lengths))
        bc = tuple(str(b).lower() for b in self.bc)
        nax = {"interval": 1, "rectangle": 2}.get(self.kind)
        if nax is None:
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if len(lengths) != nax:
            raise ValueError(f"{self.kind} needs {nax} length(s)")
        if any(x <= 0 for x in lengths):
            raise ValueError("domain lengths must be positive")
        if len(bc) != 2 * nax or any(b not in BC_TAGS for b in bc):
            raise ValueError(f"{self.kind} needs {2 * nax} boundary tags from {BC_TAGS}")
        object.__setattr__(self, "lengths", lengths)
        object.__setattr__(self, "bc", bc)

    @classmethod
    def interval(cls, L: float = 1.0, bc=("dirichlet", "dirichlet")) -> "DomainSpec":
        return cls("interval", (L,), tuple(bc))

    @classmethod
    def rectangle(cls, Lx: float, Ly: float, bc=("dirichlet",) * 4) -> "DomainSpec":
        return cls("rectangle", (Lx, Ly), tuple(bc))

    @property
    def axes(self):
        return [(self.lengths[i], self.bc[2 * i], self.bc[2 * i + 1]) for i in range(len(self.lengths))]

    @property
    def all_neumann(self) -> bool:
        return all(b == "neumann" for b in self.bc)


# -- one-dimensional factors ------------------------------------------------

def _axis_indices(left: str, right: str, count: int):
    """Mode indices k and wavenumbers k*pi/L (times L) for one axis."""
    if left == right == "neumann":
        ks = np.arange(0, count)
        return ks, ks.astype(float)
    if left == right == "dirichlet":
        ks = np.arange(1, count + 1)
        return ks, ks.astype(float)
    ks = np.arange(1, count + 1)
    return ks, ks - 0.5


def _axis_eigenvalues(L, left, right, count):
    ks, w = _axis_indices(left, right, count)
    return ks, (w * math.pi / L) ** 2


def _axis_functions(L, left, right, ks, x):
    """L2-orthonormal eigenfunctions at points x, shape (len(x), len(ks))."""
    ks = np.asarray(ks)
    if left == right == "neumann":
        arg = np.outer(x, ks) * math.pi / L
        out = math.sqrt(2 / L) * np.cos(arg)
        out[:, ks == 0] = 1 / math.sqrt(L)
        return out
    if left == right == "dirichlet":
        return math.sqrt(2 / L) * np.sin(np.outer(x, ks) * math.pi / L)
    arg = np.outer(x, ks - 0.5) * math.pi / L
    if left == "dirichlet":
        return math.sqrt(2 / L) * np.sin(arg)
    # neumann at 0, dirichlet at L
    return math.sqrt(2 / L) * np.cos(arg)


def _axis_derivatives(L, left, right, ks, x):
    """x-derivatives of the functions returned by _axis_functions."""
    ks = np.asarray(ks)
    w = (ks - 0.5 if left != right else ks.astype(float)) * math.pi / L
    arg = np.outer(x, w)
    c = math.sqrt(2 / L) * w[None, :]
    if left == "neumann":
        return -c * np.sin(arg)
    return c * np.cos(arg)


@dataclass(frozen=True)
class LaplaceEigensystem:
    kappas: np.ndarray
    mode_ids: tuple
    includes_zero: bool


def laplace_eigenvalues(domain: DomainSpec, K: int, with_zero: bool = False) -> LaplaceEigensystem:
    """The K smallest nonzero eigenvalues of -Lap with the given boundary tags.

    ``with_zero`` prepends the constant mode (kappa = 0) when every face is
    Neumann; it is never counted in K.
    """
    if K < 1:
        raise ValueError("K must be >= 1")
    per_axis = [_axis_eigenvalues(L, l, r, K + 1) for L, l, r in domain.axes]
    if len(per_axis) == 1:
        ks, vals = per_axis[0]
        ids = [(int(k),) for k in ks]
        kap = vals
    else:
        (kx, vx), (ky, vy) = per_axis
        kap = (vx[:, None] + vy[None, :]).ravel()
        ids = [(int(i), int(j)) for i in kx for j in ky]
    # stable sort with id tiebreak keeps degenerate pairs deterministic
    order = sorted(range(len(kap)), key=lambda i: (kap[i], ids[i]))
    zero = domain.all_neumann
    chosen = [i for i in order if kap[i] > 0][:K]
    if zero and with_zero:
        chosen = [i for i in order if kap[i] == 0] + chosen
    return LaplaceEigensystem(np.array([kap[i] for i in chosen]), tuple(ids[i] for i in chosen), zero)


# -- linear stability --------------------------------------------------------

def _as_B(B) -> np.ndarray:
    b = np.asarray(B, dtype=float)
    if b.ndim != 2 or b.shape[0] != b.shape[1]:
        raise ValueError("B must be a square matrix")
    return b


def sign_conditions(B) -> tuple[bool, bool, bool]:
    """(b11 > 0, b11 + b22 < 0, det B > 0)."""
    b = _as_B(B)
    if b.shape != (2, 2):
        raise ValueError("sign conditions are defined for 2x2 B only")
    return bool(b[0, 0] > 0), bool(b[0, 0] + b[1, 1] < 0), bool(b[0, 0] * b[1, 1] - b[0, 1] * b[1, 0] > 0)


def mode_matrix(kappa: float, D, B) -> np.ndarray:
    """kappa D - B, the linearization restricted to one Laplace eigenspace."""
    if kappa < 0:
        raise ValueError("kappa must be nonnegative")
    return kappa * np.diag(np.asarray(D, dtype=float)) - _as_B(B)


def cubic_nonlinearity(B, coefficient: float = 1.0):
    """f(u) = B u - coefficient * u**3 componentwise; u has shape (n, npts)."""
    b = _as_B(B)

    def f(u):
        return b @ u - coefficient * u ** 3

    return f


@dataclass
class ReactionDiffusionSpec:
    domain: DomainSpec
    diffusion: Sequence[float]
    B: np.ndarray
    nonlinearity: Callable | None = None
    K: int = 64

    def __post_init__(self):
        self.diffusion = np.asarray(self.diffusion, dtype=float)
        self.B = _as_B(self.B)
        if np.any(self.diffusion <= 0):
            raise ValueError("diffusion coefficients must be positive")
        if self.B.shape[0] != self.diffusion.size:
            raise ValueError("B and diffusion sizes differ")
        if self.K < 1:
            raise ValueError("K must be >= 1")

    @property
    def n(self) -> int:
        return self.diffusion.size

    def f(self):
        return self.nonlinearity or (lambda u: self.B @ u)


def _mode_spectra(kappas, D, B):
    mats = kappas[:, None, None] * np.diag(D)[None] - B[None]
    return np.linalg.eigvals(mats)


def spectral_gap(spec: ReactionDiffusionSpec) -> tuple[float, int]:
    """Smallest real part over the retained modes, and the index of the minimizing mode.

    The index refers to ``laplace_eigenvalues(domain, K, with_zero=True)``.
    Raises TailClosureError unless kappa_K d_min - |B|_2 >= lambda0, which
    certifies that discarded modes cannot lower the gap.
    """
    eig = laplace_eigenvalues(spec.domain, spec.K, with_zero=True)
    re = _mode_spectra(eig.kappas, spec.diffusion, spec.B).real.min(axis=1)
    k = int(np.argmin(re))
    lam0 = float(re[k])
    bnorm = float(np.linalg.norm(spec.B, 2))
    dmin = float(spec.diffusion.min())
    threshold = (lam0 + bnorm) / dmin
    if eig.kappas[-1] < threshold:
        required = spec.K
        while laplace_eigenvalues(spec.domain, required).kappas[-1] < threshold:
            required *= 2
        lo = required // 2
        while lo < required - 1:
            mid = (lo + required) // 2
            if laplace_eigenvalues(spec.domain, mid).kappas[-1] < threshold:
                lo = mid
            else:
                required = mid
        raise TailClosureError(spec.K, required, threshold)
    return lam0, k


def _require_signs(B):
    s = sign_conditions(B)
    if not all(s):
        raise SignConditionError(f"sign conditions fail: (b11>0, tr<0, det>0) = {s}")


def hyperbola_bound(d1: float, kappa: float, B) -> float:
    """d2 on the curve C_k above d1; +inf once d1 >= b11/kappa."""
    b = _as_B(B)
    if d1 >= b[0, 0] / kappa:
        return math.inf
    return b[0, 1] * b[1, 0] / (kappa ** 2 * (d1 - b[0, 0] / kappa)) + b[1, 1] / kappa


def hyperbola_region_test(d1: float, d2: float, B, kappas) -> bool:
    """True when (d1, d2) lies in the stable region cut out by every retained curve."""
    _require_signs(B)
    b = _as_B(B)
    for kap in np.asarray(kappas, dtype=float):
        if kap <= 0:
            continue
        if d1 >= b[0, 0] / kap:
            continue
        if not d2 < hyperbola_bound(d1, kap, b):
            return False
    return True


def hyperbola_curves(B, kappas, d1_grid) -> list[tuple[int, float, float]]:
    """Rows (k, d1, d2) sampling C_k: (kappa d1 - b11)(kappa d2 - b22) = b12 b21, d1 < b11/kappa."""
    _require_signs(B)
    b = _as_B(B)
    rows = []
    for k, kap in enumerate(np.asarray(kappas, dtype=float), start=1):
        if kap <= 0:
            continue
        for d1 in d1_grid:
            if d1 < b[0, 0] / kap:
                rows.append((k, float(d1), hyperbola_bound(float(d1), kap, b)))
    return rows


@dataclass
class RegionScan:
    d1: np.ndarray
    d2: np.ndarray
    in_region: np.ndarray | None
    gap: np.ndarray

    @property
    def boundary(self) -> np.ndarray:
        return np.abs(self.gap) < GAP_BAND

    @property
    def agreement(self) -> float:
        """Fraction of non-boundary cells where the region test matches gap > 0."""
        if self.in_region is None:
            return math.nan
        mask = ~self.boundary
        return float(np.mean(self.in_region[mask] == (self.gap[mask] > 0))) if mask.any() else 1.0

    def rows(self):
        for i, a in enumerate(self.d1):
            for j, c in enumerate(self.d2):
                inside = "" if self.in_region is None else int(self.in_region[i, j])
                yield float(a), float(c), inside, float(self.gap[i, j])


def _gap_rows(args):
    d1_rows, d2_grid, kappas, B = args
    out = np.empty((len(d1_rows), len(d2_grid)))
    b = np.asarray(B)
    for i, d1 in enumerate(d1_rows):
        dd = np.empty((len(d2_grid), len(kappas), 2, 2))
        dd[..., 0, 0] = kappas[None, :] * d1 - b[0, 0]
        dd[..., 0, 1] = -b[0, 1]
        dd[..., 1, 0] = -b[1, 0]
        dd[..., 1, 1] = np.outer(d2_grid, kappas) - b[1, 1]
        out[i] = np.linalg.eigvals(dd).real.min(axis=(1, 2))
    return out


def region_scan(B, kappas, d1_grid, d2_grid, workers: int = 1, include_zero: bool = False) -> RegionScan:
    """Hyperbola membership and brute-force gap sign on a (d1, d2) grid.

    When B violates the sign conditions only the brute-force gap is filled.
    """
    b = _as_B(B)
    kappas = np.asarray(kappas, dtype=float)
    kap_b = np.concatenate([[0.0], kappas]) if include_zero else kappas
    d1_grid = np.asarray(d1_grid, dtype=float)
    d2_grid = np.asarray(d2_grid, dtype=float)
    if workers > 1 and len(d1_grid) > 1:
        chunks = np.array_split(d1_grid, min(workers, len(d1_grid)))
        with ProcessPoolExecutor(max_workers=workers) as ex:
            gap = np.vstack(list(ex.map(_gap_rows, [(c, d2_grid, kap_b, b) for c in chunks])))
    else:
        gap = _gap_rows((d1_grid, d2_grid, kap_b, b))
    inside = None
    if all(sign_conditions(b)):
        inside = np.array([[hyperbola_region_test(x, y, b, kappas) for y in d2_grid] for x in d1_grid])
    return RegionScan(d1_grid, d2_grid, inside, gap)


# -- Galerkin discretization ------------------------------------------------

@dataclass
class GalerkinSystem:
    """Spectral Galerkin model in L2-orthonormal eigenfunction coordinates.

    State layout is component-major: [c_1 (K modes), c_2 (K modes), ...].
    ``A`` is the shifted diffusion operator kappa D + M, ``nonlinearity`` the
    shifted reaction term f(u) + M u, so A - f'(0) is unaffected by M.
    """

    spec: ReactionDiffusionSpec
    eigen: LaplaceEigensystem
    A: PositiveTypeOperator
    B_lift: np.ndarray
    M: float
    to_grid: np.ndarray
    from_grid: np.ndarray
    points: np.ndarray
    nonlinearity: Callable = field(repr=False)

    @property
    def n_modes(self) -> int:
        return len(self.eigen.kappas)

    def grid_values(self, c) -> np.ndarray:
        c = np.asarray(c).reshape(self.spec.n, self.n_modes)
        return c @ self.to_grid.T

    def project(self, values) -> np.ndarray:
        """Mode coefficients of grid values with shape (n, npts)."""
        return (np.asarray(values) @ self.from_grid.T).reshape(-1)

    def project_function(self, fn) -> np.ndarray:
        """Mode coefficients of fn(points) -> (n, npts)."""
        return self.project(fn(self.points))


def shift_constant(B) -> float:
    """M = max(0, 1 - lambda_min(sym B))."""
    b = _as_B(B)
    return max(0.0, 1.0 - float(np.linalg.eigvalsh(0.5 * (b + b.T))[0]))


def _axis_grid(L, count):
    h = L / count
    return (np.arange(count) + 0.5) * h, h


def galerkin_assemble(spec: ReactionDiffusionSpec, n_points: int | None = None,
                      dealias: float = DEALIAS, M: float | None = None) -> GalerkinSystem:
    """Assemble the shifted Galerkin system on the K lowest modes (plus the constant mode if any).

    The reaction term is applied pseudospectrally on a midpoint grid with
    ``ceil(dealias * (max mode index + 1))`` points per axis.
    """
    eig = laplace_eigenvalues(spec.domain, spec.K, with_zero=True)
    ids = np.array(eig.mode_ids)
    axes = spec.domain.axes
    needed = [int(math.ceil(dealias * (ids[:, a].max() + 1))) for a in range(len(axes))]
    if n_points is None:
        counts = needed
    else:
        counts = [int(n_points)] * len(axes)
        if any(c < r for c, r in zip(counts, needed)):
            raise ValueError(f"{n_points} collocation points per axis cannot resolve the retained "
                             f"modes; need at least {max(needed)} (or lower K)")
    factors, weights, coords = [], [], []
    for a, ((L, l, r), cnt) in enumerate(zip(axes, counts)):
        x, h = _axis_grid(L, cnt)
        coords.append(x)
        factors.append(_axis_functions(L, l, r, ids[:, a], x))
        weights.append(h)
    if len(axes) == 1:
        phi = factors[0]
        points = coords[0][None, :]
        w = weights[0]
    else:
        phi = (factors[0][:, None, :] * factors[1][None, :, :]).reshape(-1, len(ids))
        gx, gy = np.meshgrid(coords[0], coords[1], indexing="ij")
        points = np.vstack([gx.ravel(), gy.ravel()])
        w = weights[0] * weights[1]
    from_grid = w * phi.T
    shift = shift_constant(spec.B) if M is None else float(M)
    if shift < 0:
        raise ValueError("shift M must be nonnegative")
    n, K = spec.n, len(ids)
    diag = (spec.diffusion[:, None] * eig.kappas[None, :]).ravel() + shift
    A = PositiveTypeOperator(np.diag(diag), HilbertMetric.euclidean(n * K))
    B_lift = np.kron(spec.B, np.eye(K))
    f = spec.f()

    def nonlinearity(c, t=None):
        vals = c.reshape(n, K) @ phi.T
        return (f(vals) @ from_grid.T).reshape(-1) + shift * c

    return GalerkinSystem(spec, eig, A, B_lift, shift, phi, from_grid, points, nonlinearity)


@dataclass(frozen=True)
class DecayReport:
    lambda0: float
    rows: tuple  # (alpha, rate, prefactor, lambda0)
    stable: bool

    def relative_errors(self) -> dict:
        return {a: abs(r - self.lambda0) / abs(self.lambda0) for a, r, _, _ in self.rows}


def simulate_rd(spec: ReactionDiffusionSpec, u0, horizon: float, step: float = 0.01,
                system: GalerkinSystem | None = None, tail_fraction: float = 0.5,
                record_every: int = 1, alphas=(0.0, 0.5)) -> tuple[Trajectory, DecayReport]:
    """Integrate the Galerkin system and fit decay rates in the H_alpha norms.

    ``u0`` holds mode coefficients in the component-major layout.  H_alpha
    norms are taken with respect to the shifted operator, whose H_{1/2} norm
    is the Garding form value.
    """
    system = system or galerkin_assemble(spec)
    lam0, _ = spectral_gap(spec)
    prob = MildProblem(system.A, lambda u, t: system.nonlinearity(u, t), u0, 0.0, horizon, step,
                       record_every)
    traj = solve_mild(prob, error_estimate=False).with_norms(system.A, alphas)
    rows = []
    for a in alphas:
        norms = traj.norms[float(a)]
        if not np.any(norms > 0):
            rows.append((float(a), math.nan, 0.0, lam0))
            continue
        fit = decay_fit(traj, a, tail_fraction)
        rows.append((float(a), fit.rate, fit.prefactor, lam0))
    return traj, DecayReport(lam0, tuple(rows), lam0 > 0)


def h_half_norm(system: GalerkinSystem, c) -> float:
    """|A^{1/2} c| for the shifted Galerkin operator."""
    return system.A.metric.norm(fractional_power(system.A, 0.5) @ np.asarray(c))


def garding_value(system: GalerkinSystem, c) -> float:
    """sqrt(sum_j d_j |grad u_j|^2_L2 + M |u|^2_L2) by midpoint quadrature in physical space.

    The grid is fine enough that the quadrature is exact for the retained
    trigonometric modes, so this is an independent route to |A^{1/2} c|.
    """
    spec = system.spec
    ids = np.array(system.eigen.mode_ids)
    vals, ders, w = [], [], 1.0
    for a, (L, l, r) in enumerate(spec.domain.axes):
        x, h = _axis_grid(L, 2 * int(ids[:, a].max()) + 4)
        vals.append(_axis_functions(L, l, r, ids[:, a], x))
        ders.append(_axis_derivatives(L, l, r, ids[:, a], x))
        w *= h
    if len(vals) == 1:
        phi, grads = vals[0], [ders[0]]
    else:
        def outer(p, q):
            return (p[:, None, :] * q[None, :, :]).reshape(-1, len(ids))
        phi = outer(vals[0], vals[1])
        grads = [outer(ders[0], vals[1]), outer(vals[0], ders[1])]
    c = np.asarray(c).reshape(spec.n, system.n_modes)
    u = c @ phi.T
    energy = system.M * w * float((np.abs(u) ** 2).sum())
    for g in grads:
        du = c @ g.T
        energy += w * float((spec.diffusion[:, None] * np.abs(du) ** 2).sum())
    return math.sqrt(energy)
