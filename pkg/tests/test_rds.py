import math

import numpy as np
import pytest
import scipy.linalg as sla
import scipy.sparse as sp
from hypothesis import given
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from parastab.rds import (
    DomainSpec,
    ReactionDiffusionSpec,
    SignConditionError,
    TailClosureError,
    cubic_nonlinearity,
    galerkin_assemble,
    garding_value,
    h_half_norm,
    hyperbola_bound,
    hyperbola_curves,
    hyperbola_region_test,
    laplace_eigenvalues,
    mode_matrix,
    region_scan,
    shift_constant,
    sign_conditions,
    simulate_rd,
    spectral_gap,
)

B = np.array([[1.0, -1.0], [3.0, -2.0]])
PI2 = math.pi**2
UNIT = DomainSpec.interval(1.0)


def fd_eigenvalues(left, right, count, n=2000, L=1.0):
    """Second-order finite differences for -u'' on (0, L); vertex grid, ghost points for Neumann."""
    if left == right == "dirichlet":
        h = L / (n + 1)
        d = np.full(n, 2.0)
    else:
        # cell-centred grid: Dirichlet by odd, Neumann by even reflection
        h = L / n
        d = np.full(n, 2.0)
        d[0] = 3.0 if left == "dirichlet" else 1.0
        d[-1] = 3.0 if right == "dirichlet" else 1.0
    e = -np.ones(n - 1)
    vals = sla.eigvalsh_tridiagonal(d / h**2, e / h**2, select="i", select_range=(0, count))
    return vals


@pytest.mark.parametrize("bc", [("dirichlet", "dirichlet"), ("neumann", "neumann"),
                                ("dirichlet", "neumann"), ("neumann", "dirichlet")])
def test_interval_eigenvalues_against_finite_differences(bc):
    eig = laplace_eigenvalues(DomainSpec.interval(1.0, bc), 10)
    fd = fd_eigenvalues(*bc, 11)
    fd = fd[fd > 1e-8][:10]
    np.testing.assert_allclose(eig.kappas, fd, rtol=1e-3)
    assert eig.includes_zero == (bc == ("neumann", "neumann"))


def test_eigenvalue_examples():
    np.testing.assert_allclose(laplace_eigenvalues(UNIT, 3).kappas, PI2 * np.array([1, 4, 9]))
    neu = laplace_eigenvalues(DomainSpec.interval(1.0, ("neumann", "neumann")), 2, with_zero=True)
    np.testing.assert_allclose(neu.kappas, PI2 * np.array([0, 1, 4]), atol=1e-12)
    assert neu.includes_zero
    rect = laplace_eigenvalues(DomainSpec.rectangle(1, 1), 3)
    np.testing.assert_allclose(rect.kappas, PI2 * np.array([2, 5, 5]))
    assert rect.mode_ids[1:] == ((1, 2), (2, 1))


def test_rectangle_against_tensor_fd():
    # separable: rectangle eigenvalues are sums of the two axis spectra
    dom = DomainSpec.rectangle(1.0, 2.0, ("dirichlet", "neumann", "neumann", "neumann"))
    eig = laplace_eigenvalues(dom, 12)
    fx = fd_eigenvalues("dirichlet", "neumann", 12)
    fy = fd_eigenvalues("neumann", "neumann", 12, L=2.0)
    fy[0] = 0.0
    brute = np.sort((fx[:, None] + fy[None, :]).ravel())
    np.testing.assert_allclose(eig.kappas, brute[brute > 1e-8][:12], rtol=1e-3)


def test_domain_validation():
    with pytest.raises(ValueError):
        DomainSpec.interval(-1.0)
    with pytest.raises(ValueError):
        DomainSpec("sphere", (1.0,), ("dirichlet", "dirichlet"))
    with pytest.raises(ValueError):
        DomainSpec.interval(1.0, ("dirichlet", "robin"))
    with pytest.raises(ValueError):
        laplace_eigenvalues(UNIT, 0)


def test_sign_conditions_examples():
    assert sign_conditions(B) == (True, True, True)
    assert sign_conditions([[1, 1], [-2, -2]]) == (True, True, False)
    assert sign_conditions(-np.eye(2)) == (False, True, True)
    with pytest.raises(ValueError):
        sign_conditions(np.eye(3))


def test_mode_matrix_examples():
    np.testing.assert_array_equal(mode_matrix(0, [1, 1], B), -B)
    np.testing.assert_allclose(mode_matrix(PI2, [0.05, 0.3], B), [[PI2 * 0.05 - 1, 1], [-3, PI2 * 0.3 + 2]])
    np.testing.assert_array_equal(mode_matrix(1, [1, 1], np.zeros((2, 2))), np.eye(2))


def test_gap_examples():
    heat = ReactionDiffusionSpec(UNIT, [0.7], np.zeros((1, 1)), K=8)
    lam, k = spectral_gap(heat)
    assert lam == pytest.approx(0.7 * PI2) and k == 0
    stable = ReactionDiffusionSpec(UNIT, [0.05, 0.3], B, K=64)
    assert spectral_gap(stable)[0] > 0
    unstable = ReactionDiffusionSpec(UNIT, [0.05, 0.5], B, K=64)
    det = np.linalg.det(mode_matrix(PI2, [0.05, 0.5], B))
    assert det == pytest.approx(-0.513, abs=5e-4)
    assert spectral_gap(unstable)[0] < 0


def test_tail_closure_names_required_K():
    spec = ReactionDiffusionSpec(UNIT, [1e-3, 1e-3], B, K=2)
    with pytest.raises(TailClosureError) as exc:
        spectral_gap(spec)
    req = exc.value.required
    assert req > 2
    spectral_gap(ReactionDiffusionSpec(UNIT, [1e-3, 1e-3], B, K=req))
    with pytest.raises(TailClosureError):
        spectral_gap(ReactionDiffusionSpec(UNIT, [1e-3, 1e-3], B, K=req - 1))


@given(st.floats(0.01, 0.5), st.floats(0.01, 1.0), st.integers(0, 3))
def test_truncation_invariance(d1, d2, extra):
    spec = ReactionDiffusionSpec(UNIT, [d1, d2], B, K=4)
    try:
        lam, k = spectral_gap(spec)
    except TailClosureError as exc:
        spec = ReactionDiffusionSpec(UNIT, [d1, d2], B, K=exc.required)
        lam, k = spectral_gap(spec)
    bigger = ReactionDiffusionSpec(UNIT, [d1, d2], B, K=spec.K * (2 + extra))
    assert spectral_gap(bigger) == (lam, k)


@given(st.floats(0.01, 0.2), st.floats(0.01, 2.0))
def test_negative_determinant_certifies_instability(d1, d2):
    det = np.linalg.det(mode_matrix(PI2, [d1, d2], B))
    if det < 0:
        lam, _ = spectral_gap(ReactionDiffusionSpec(UNIT, [d1, d2], B, K=64))
        assert lam < 0


def test_hyperbola_examples():
    kap = laplace_eigenvalues(UNIT, 64).kappas
    assert hyperbola_region_test(0.05, 0.3, B, kap)
    assert not hyperbola_region_test(0.05, 0.5, B, kap)
    # closed form: d2 = b12 b21 / (k^2 (d1 - b11/k)) + b22/k at k = pi^2
    bound = -3 / (PI2**2 * (0.05 - 1 / PI2)) - 2 / PI2
    assert hyperbola_bound(0.05, PI2, B) == pytest.approx(bound, rel=1e-15)
    assert 0.397 < bound < 0.398
    assert hyperbola_region_test(1 / PI2, 100.0, B, kap)
    assert hyperbola_bound(1 / PI2, PI2, B) == math.inf
    assert hyperbola_bound(0.0, PI2, B) == pytest.approx(3 / PI2 - 2 / PI2)
    with pytest.raises(SignConditionError):
        hyperbola_region_test(0.05, 0.3, [[1, 1], [-2, -2]], kap)


def test_hyperbola_curves_lie_on_zero_determinant():
    kap = laplace_eigenvalues(UNIT, 3).kappas
    rows = hyperbola_curves(B, kap, np.linspace(0, 0.2, 41))
    assert rows
    for k, d1, d2 in rows:
        kk = kap[k - 1]
        assert (kk * d1 - 1) * (kk * d2 + 2) == pytest.approx(-3, rel=1e-10)
        assert d1 < 1 / kk


def test_region_scan_small_and_parallel():
    kap = laplace_eigenvalues(UNIT, 64).kappas
    d1, d2 = np.linspace(0.01, 0.2, 12), np.linspace(0.05, 1.0, 9)
    s1 = region_scan(B, kap, d1, d2)
    s2 = region_scan(B, kap, d1, d2, workers=2)
    np.testing.assert_array_equal(s1.gap, s2.gap)
    assert s1.agreement == 1.0
    bad = region_scan([[1, 1], [-2, -2]], kap, d1, d2)
    assert bad.in_region is None and np.isnan(bad.agreement)


def test_shift_constant_worked_value():
    # sym B = [[1, 1], [1, -2]], lambda_min = (-1 - sqrt(13)) / 2
    assert shift_constant(B) == pytest.approx(1 + (1 + math.sqrt(13)) / 2, abs=1e-14)
    assert shift_constant(5 * np.eye(2)) == 0.0


def test_galerkin_heat_single_mode():
    spec = ReactionDiffusionSpec(UNIT, [0.3], np.zeros((1, 1)), K=1)
    sys_ = galerkin_assemble(spec)
    assert sys_.M == 1.0
    assert sys_.A.entries[0, 0] == pytest.approx(0.3 * PI2 + 1.0)
    np.testing.assert_allclose(sys_.nonlinearity(np.array([2.0])), [2.0])


def test_galerkin_linear_reproduces_mode_blocks():
    rng = np.random.default_rng(2)
    spec = ReactionDiffusionSpec(DomainSpec.rectangle(1.0, 1.5, ("dirichlet", "neumann", "neumann", "neumann")),
                                 [0.05, 0.3], B, K=10)
    sys_ = galerkin_assemble(spec)
    c = rng.standard_normal(sys_.A.dim)
    np.testing.assert_allclose(sys_.nonlinearity(c), sys_.B_lift @ c + sys_.M * c, atol=1e-12)
    lin = np.asarray(sys_.A.entries).real - sys_.B_lift - sys_.M * np.eye(sys_.A.dim)
    K = sys_.n_modes
    for k, kap in enumerate(sys_.eigen.kappas):
        idx = [k, K + k]
        np.testing.assert_allclose(lin[np.ix_(idx, idx)], mode_matrix(kap, spec.diffusion, B), atol=1e-12)


def test_galerkin_rejects_coarse_grid():
    spec = ReactionDiffusionSpec(UNIT, [1.0], np.zeros((1, 1)), K=16)
    with pytest.raises(ValueError):
        galerkin_assemble(spec, n_points=8)


def _fd_cubic_reference(D, u0_fn, T, n=512):
    h = 1.0 / (n + 1)
    x = h * np.arange(1, n + 1)
    lap = sp.diags([np.ones(n - 1), -2 * np.ones(n), np.ones(n - 1)], [-1, 0, 1]) / h**2
    comps = len(D)
    big = sp.block_diag([d * lap for d in D]).tocsr()

    def rhs(t, y):
        return big @ y - y**3

    def jac(t, y):
        return big - sp.diags(3 * y**2)

    y0 = np.concatenate(u0_fn(x))
    sol = solve_ivp(rhs, (0, T), y0, method="BDF", jac=jac, rtol=1e-9, atol=1e-12)
    return x, sol.y[:, -1].reshape(comps, n)


def test_galerkin_cubic_matches_finite_differences():
    # slow diffusion keeps the state O(1) so the cubic term matters at T = 1
    D = [0.1, 0.05]
    spec = ReactionDiffusionSpec(UNIT, D, np.zeros((2, 2)), nonlinearity=cubic_nonlinearity(np.zeros((2, 2))), K=8)
    sys_ = galerkin_assemble(spec)

    def u0_fn(x):
        return [np.sin(math.pi * x) + 0.5 * np.sin(2 * math.pi * x), 0.8 * np.sin(math.pi * x)]

    c0 = sys_.project_function(lambda p: np.array(u0_fn(p[0])))
    traj, _ = simulate_rd(spec, c0, 1.0, step=0.005, system=sys_)
    x, ref = _fd_cubic_reference(D, u0_fn, 1.0)
    phi = np.sqrt(2) * np.sin(np.outer(x, np.arange(1, 9)) * math.pi)
    ours = traj.states[-1].real.reshape(2, 8) @ phi.T
    assert np.max(np.abs(ours - ref)) <= 1e-3
    # the pure heat flow from the same data is far away, so the cubic term is exercised
    heat = [np.exp(-D[0] * PI2) * np.sin(math.pi * x) + 0.5 * np.exp(-4 * D[0] * PI2) * np.sin(2 * math.pi * x),
            0.8 * np.exp(-D[1] * PI2) * np.sin(math.pi * x)]
    assert np.max(np.abs(ref - np.array(heat))) > 5e-2


def test_h_half_norm_equals_garding_form():
    rng = np.random.default_rng(4)
    for dom in (UNIT, DomainSpec.interval(2.0, ("neumann", "neumann")),
                DomainSpec.rectangle(1.0, 0.5, ("dirichlet", "neumann", "dirichlet", "dirichlet"))):
        sys_ = galerkin_assemble(ReactionDiffusionSpec(dom, [0.05, 0.3], B, K=12))
        c = rng.standard_normal(sys_.A.dim)
        assert h_half_norm(sys_, c) == pytest.approx(garding_value(sys_, c), rel=1e-10)


def test_heat_decay_rate():
    spec = ReactionDiffusionSpec(UNIT, [0.1], np.zeros((1, 1)), K=64)
    sys_ = galerkin_assemble(spec)
    c0 = sys_.project_function(lambda p: (p[0] * (1 - p[0]))[None, :])
    _, rep = simulate_rd(spec, c0, 3.0, step=0.01, system=sys_)
    for alpha, rate, _, lam in rep.rows:
        assert rate == pytest.approx(0.1 * PI2, rel=0.02)


def test_unstable_simulation_flagged():
    spec = ReactionDiffusionSpec(UNIT, [0.05, 0.5], B, cubic_nonlinearity(B), K=16)
    sys_ = galerkin_assemble(spec)
    lin = np.block([[mode_matrix(PI2, spec.diffusion, B)]])
    w, v = np.linalg.eig(lin)
    u = np.zeros(sys_.A.dim)
    vec = v[:, np.argmin(w.real)].real
    u[0], u[sys_.n_modes] = 1e-3 * vec
    traj, rep = simulate_rd(spec, u, 5.0, step=0.01, system=sys_)
    assert not rep.stable and rep.lambda0 < 0
    assert traj.norms[0.0][-1] > traj.norms[0.0][0]
    assert all(rate < 0 for _, rate, _, _ in rep.rows)


def test_zero_initial_data_stays_zero():
    spec = ReactionDiffusionSpec(UNIT, [0.05, 0.3], B, cubic_nonlinearity(B), K=8)
    traj, rep = simulate_rd(spec, np.zeros(16), 1.0, step=0.05)
    assert not np.any(traj.states)
    assert all(math.isnan(rate) for _, rate, _, _ in rep.rows)
