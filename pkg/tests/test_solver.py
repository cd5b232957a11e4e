import csv
import math

import numpy as np
import pytest

from resonance_lab.dispersion import make_dispersion, make_system
from resonance_lab.errors import InvalidParameter, SolverDiverged
from resonance_lab.spectral import (
    Field,
    Grid,
    Symbol2,
    dealias_mask,
    time_integrated_oscillatory,
)
from resonance_lab.solver import (
    EvolutionProblem,
    ProfileState,
    conj_slot,
    duhamel_picard_oracle,
    evolve_profile,
    lattice_position,
    linear_evolve,
    normal_form_split,
    power_term,
    profile_rhs,
    transformed_integrand_magnitude,
    vector_field_split,
    weighted_profile_derivative,
)

SCHR = make_dispersion("schrodinger")
TWO_PI = 2 * math.pi


def random_data(grid, kmax, amplitude, seed=0):
    rng = np.random.default_rng(seed)
    keep = np.abs(grid.modes) <= kmax
    c = np.where(keep, rng.standard_normal(grid.N) + 1j * rng.standard_normal(grid.N), 0)
    return Field(grid, "frequency", c * amplitude / np.linalg.norm(c))


def problem(signs="++", N=32, L=TWO_PI, dealias=True, coeff=1.0):
    return EvolutionProblem(make_system(SCHR), Grid(1, N, L), [power_term(signs, coeff)], dealias)


class ReversedPhase:
    """``-phi``: turns ``int e^{-i s phi}`` into the forward time factor."""

    def __init__(self, phase):
        self.phase = phase

    def value(self, xi, eta):
        return -self.phase.value(xi, eta)


def centered(grid):
    x = grid.x()
    return np.where(x < grid.L / 2, x, x - grid.L)


# -- linear flow -------------------------------------------------------------------

def test_linear_evolve_plane_wave():
    g = Grid(1, 32)
    u0 = Field.from_function(g, lambda x: np.exp(3j * x))
    t = 0.37
    u = linear_evolve(SCHR, u0, t).to_physical().values
    np.testing.assert_allclose(u, np.exp(1j * t * 9) * np.exp(3j * g.x()), atol=1e-13)


def test_linear_evolve_conserves_norm():
    g = Grid(1, 64, 10.0)
    u0 = random_data(g, 20, 1.0)
    for t in (0.1, 3.0, 250.0):
        assert abs(linear_evolve(SCHR, u0, t).l2() - u0.l2()) <= 1e-12


def test_linear_evolve_system():
    g = Grid(1, 16)
    sys_ = make_system([SCHR, make_dispersion("wave")])
    u0 = [random_data(g, 4, 1.0, 1), random_data(g, 4, 1.0, 2)]
    out = linear_evolve(sys_, u0, 0.5)
    np.testing.assert_allclose(out[1].values,
                               linear_evolve(sys_.component(2), u0[1], 0.5).values)


def test_conj_slot():
    g = Grid(1, 8)
    f = random_data(g, 3, 1.0).values
    assert conj_slot(f, g, 1) is f
    neg = conj_slot(f, g, -1)
    for q, m in enumerate(g.modes):
        if abs(m) < g.N // 2:
            assert neg[q] == np.conj(f[list(g.modes).index(-m)])


# -- profile stepper ---------------------------------------------------------------

def test_no_terms_profile_constant():
    pb = EvolutionProblem(make_system(SCHR), Grid(1, 32), [])
    u0 = random_data(pb.grid, 10, 1.0)
    tr = evolve_profile(pb, u0, 1.0, 0.1)
    assert np.all(tr.profiles == tr.profiles[0])
    np.testing.assert_allclose(tr.solution(-1).to_frequency().values,
                               linear_evolve(SCHR, u0, 1.0).values, atol=1e-14)


def test_rk_matches_picard_oracle():
    pb = problem()
    u0 = random_data(pb.grid, 5, 1e-2)
    rk = evolve_profile(pb, u0, 0.1, 0.1 / 64).profiles[-1]
    pic = duhamel_picard_oracle(pb, u0, 0.1, 3).fhat
    assert np.max(np.abs(rk - pic)) <= 1e-8


def test_rk_order_four():
    pb = problem(N=16)
    u0 = random_data(pb.grid, 4, 1.0)
    T = 1.0
    ref = evolve_profile(pb, u0, T, 1 / 512).profiles[-1]
    errs = [np.max(np.abs(evolve_profile(pb, u0, T, dt).profiles[-1] - ref))
            for dt in (1 / 16, 1 / 32, 1 / 64)]
    order = np.polyfit(np.log([1 / 16, 1 / 32, 1 / 64]), np.log(errs), 1)[0]
    assert abs(order - 4.0) <= 0.3
    a, b, c = (evolve_profile(pb, u0, T, dt).profiles[-1] for dt in (1 / 32, 1 / 64, 1 / 128))
    ratio = np.max(np.abs(a - b)) / np.max(np.abs(b - c))
    assert 12 <= ratio <= 20


def test_zero_data_fixed_point():
    pb = problem()
    tr = evolve_profile(pb, Field.zeros(pb.grid), 0.5, 0.05)
    assert not np.any(tr.profiles)


def test_linear_limit():
    pb = problem()
    u0 = random_data(pb.grid, 5, 1.0)
    sizes = []
    for lam in (1e-1, 1e-2, 1e-3):
        ul = Field(pb.grid, "frequency", lam * u0.values)
        f = evolve_profile(pb, ul, 0.5, 0.01).profiles[-1, 0]
        sizes.append(np.linalg.norm(f - ul.values) / lam**2)
    assert max(sizes) <= 2 * min(sizes)


def test_times_and_stride():
    pb = problem()
    tr = evolve_profile(pb, random_data(pb.grid, 5, 1e-2), 1.0, 0.1, stride=3)
    np.testing.assert_allclose(tr.times, [0, 0.3, 0.6, 0.9, 1.0], atol=1e-12)
    assert np.all(np.diff(tr.times) > 0)
    tr = evolve_profile(pb, random_data(pb.grid, 5, 1e-2), 1.0, 0.3)
    assert tr.dt == pytest.approx(0.25)


@pytest.mark.parametrize("dt", [0.0, -0.1])
def test_invalid_dt(dt):
    pb = problem()
    with pytest.raises(InvalidParameter):
        evolve_profile(pb, random_data(pb.grid, 5, 1e-2), 1.0, dt)


def test_negative_T():
    pb = problem()
    with pytest.raises(InvalidParameter):
        evolve_profile(pb, random_data(pb.grid, 5, 1e-2), -1.0, 0.1)


def test_diverged():
    pb = problem()
    with pytest.raises(SolverDiverged), np.errstate(all="ignore"):
        evolve_profile(pb, random_data(pb.grid, 5, 1e200), 1.0, 0.1)
    with pytest.raises(SolverDiverged):
        ProfileState(0.0, np.array([np.nan]))


def test_wrong_component_count():
    pb = problem()
    u0 = random_data(pb.grid, 5, 1e-2)
    with pytest.raises(InvalidParameter):
        evolve_profile(pb, [u0, u0], 1.0, 0.1)


# -- Picard oracle -----------------------------------------------------------------

def test_picard_zero_iterations():
    pb = problem()
    u0 = random_data(pb.grid, 5, 1.0)
    np.testing.assert_array_equal(duhamel_picard_oracle(pb, u0, 0.3, 0).fhat[0], u0.values)
    with pytest.raises(InvalidParameter):
        duhamel_picard_oracle(pb, u0, 0.3, -1)


def test_picard_one_iteration_closed_form():
    # |phi| <= 18 on this support keeps the t/64 Simpson error below 1e-10
    pb = problem(dealias=False)
    u0 = random_data(pb.grid, 3, 1.0)
    t = 0.1
    one = duhamel_picard_oracle(pb, u0, t, 1).fhat[0]
    exact = time_integrated_oscillatory(Symbol2.one(), ReversedPhase(pb.phase(pb.terms[0])),
                                        t, u0, u0).values
    np.testing.assert_allclose(one, u0.values - 1j * exact, rtol=0, atol=1e-10)


def test_picard_contraction():
    pb = problem()
    u0 = random_data(pb.grid, 5, 1e-2)
    f1, f2, f3 = (duhamel_picard_oracle(pb, u0, 0.1, n).fhat for n in (1, 2, 3))
    assert np.linalg.norm(f3 - f2) <= 0.1 * np.linalg.norm(f2 - f1)


# -- sign bookkeeping against an independent physical-space integrator ------------------

def physical_lawson(grid, signs, coeff, u0, T, n):
    """RK4 for ``i u_t + P(D) u = c N(u)`` written in the profile variable but
    with the nonlinearity formed by pointwise products in physical space."""
    k = grid.k()
    P = SCHR.symbol(k)
    mask = dealias_mask(grid)
    conj = {"+": lambda v: v, "-": np.conj}

    def rhs(s, f):
        u = np.fft.ifft(np.exp(1j * s * P) * f) * grid.N
        nl = conj[signs[0]](u) * conj[signs[1]](u)
        nh = np.where(mask, np.fft.fft(nl) / grid.N, 0)
        return -1j * coeff * np.exp(-1j * s * P) * nh

    f = u0.values.copy()
    h = T / n
    for q in range(n):
        s = q * h
        k1 = rhs(s, f)
        k2 = rhs(s + h / 2, f + h / 2 * k1)
        k3 = rhs(s + h / 2, f + h / 2 * k2)
        k4 = rhs(s + h, f + h * k3)
        f = f + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return f


@pytest.mark.parametrize("signs", ["++", "--", "+-"])
def test_sign_bookkeeping_matches_physical_products(signs):
    pb = problem(signs, coeff=0.7 - 0.2j)
    u0 = random_data(pb.grid, 10, 1.0)
    ours = evolve_profile(pb, u0, 0.2, 0.01).profiles[-1, 0]
    ref = physical_lawson(pb.grid, signs, 0.7 - 0.2j, u0, 0.2, 20)
    assert np.max(np.abs(ours - ref)) <= 1e-10


def test_minus_minus_rhs_is_conjugate_square():
    pb = problem("--", dealias=False, N=64)
    u0 = random_data(pb.grid, 10, 1.0)
    u = u0.to_physical().values
    expected = -1j * np.fft.fft(np.conj(u) ** 2) / pb.grid.N
    got = profile_rhs(pb, 0.0, u0.values[None])[0]
    np.testing.assert_allclose(got, expected, atol=1e-12)


# -- time integration by parts -------------------------------------------------------

def phi_band(pb, lo):
    phase = pb.phase(pb.terms[0])
    return Symbol2.from_callable(lambda xi, eta: (np.abs(phase.value(xi, eta)) >= lo).astype(float))


def test_normal_form_zero_data():
    pb = problem()
    nf = normal_form_split(pb, Field.zeros(pb.grid), 1.0, phi_band(pb, 0.5), phi_min=0.5)
    for part in (nf.lhs, nf.boundary_t, nf.boundary_0, nf.remainder):
        assert not np.any(part)


def test_normal_form_residual_and_scaling():
    pb = problem()
    m = phi_band(pb, 0.5)
    u0 = random_data(pb.grid, 3, 1e-2)
    splits = [normal_form_split(pb, Field(pb.grid, "frequency", lam * u0.values), 1.0, m,
                                phi_min=0.5, dt=1 / 256) for lam in (1.0, 0.5, 0.25)]
    assert splits[0].residual <= 1e-6
    lam = np.log([1.0, 0.5, 0.25])
    rem = np.polyfit(lam, np.log([np.linalg.norm(s.remainder) for s in splits]), 1)[0]
    bnd = np.polyfit(lam, np.log([np.linalg.norm(s.boundary_t) for s in splits]), 1)[0]
    assert abs(rem - 3) <= 0.1
    assert abs(bnd - 2) <= 0.1


def test_normal_form_overlap_rejected():
    pb = problem()
    with pytest.raises(InvalidParameter):
        normal_form_split(pb, random_data(pb.grid, 3, 1e-2), 1.0, Symbol2.one(), phi_min=0.5)


# -- frequency integration by parts ----------------------------------------------------

def grad_band(pb, lo):
    phase = pb.phase(pb.terms[0])
    return Symbol2.from_callable(
        lambda xi, eta: (np.abs(phase.grad_eta(xi, eta, strict=False)) >= lo).astype(float))


def packet(grid, amp=1e-2, xi0=0.3):
    xc = centered(grid)
    w = grid.L / 12
    return Field(grid, "physical", amp * np.exp(-(xc / w) ** 2 + 1j * xi0 * xc))


def test_vector_field_residual_and_decay():
    pb = problem(N=128, L=TWO_PI * 16)
    m = grad_band(pb, 0.5)
    vf = vector_field_split(pb, packet(pb.grid), 1.0, 2.0, m, g_min=0.5, dt=1 / 256)
    assert vf.residual <= 1e-6
    assert abs(vf.decay_ratio - 0.5) <= 0.2 * 0.5
    parts = vf.derivative_term + vf.symmetric_term + vf.weight_term
    np.testing.assert_allclose(vf.transformed_term, parts, atol=1e-15)


def test_vector_field_zero_data():
    pb = problem(N=64, L=TWO_PI * 8)
    vf = vector_field_split(pb, Field.zeros(pb.grid), 1.0, 2.0, grad_band(pb, 0.5), g_min=0.5)
    assert not np.any(vf.transformed_term) and not np.any(vf.lhs)


def test_transformed_integrand_decays_like_one_over_s():
    pb = problem(N=128, L=TWO_PI * 16)
    m = grad_band(pb, 0.5)
    u0 = packet(pb.grid)
    a, b = (transformed_integrand_magnitude(pb, u0, s, m) for s in (2.0, 4.0))
    assert abs(b / a - 0.5) <= 0.1


@pytest.mark.parametrize("t0, t", [(0.0, 1.0), (-1.0, 1.0), (2.0, 1.0)])
def test_vector_field_bad_times(t0, t):
    pb = problem(N=64, L=TWO_PI * 8)
    with pytest.raises(InvalidParameter):
        vector_field_split(pb, packet(pb.grid), t0, t, grad_band(pb, 0.5), g_min=0.5)


def test_vector_field_overlap_rejected():
    pb = problem(N=64, L=TWO_PI * 8)
    with pytest.raises(InvalidParameter):
        vector_field_split(pb, packet(pb.grid), 1.0, 2.0, Symbol2.one(), g_min=0.5)


# -- weighted derivative ----------------------------------------------------------------

def test_weighted_derivative_at_zero_is_position_weight():
    g = Grid(1, 128, TWO_PI * 8)
    u0 = random_data(g, 32, 1.0)
    w = weighted_profile_derivative(u0.to_physical(), 0.0, SCHR).values
    expected = -1j * lattice_position(g) * u0.to_physical().values
    np.testing.assert_allclose(w, expected, atol=1e-12)
    x = centered(g)
    assert np.all(np.abs(lattice_position(g) - x) <= g.dk**2 * np.abs(x) ** 3 / 6 + 1e-12)


@pytest.mark.parametrize("t", [0.3, 2.0, 7.5])
def test_weighted_derivative_commutes_with_flow(t):
    g = Grid(1, 128, TWO_PI * 8)
    u0 = random_data(g, 32, 1.0)
    a = weighted_profile_derivative(linear_evolve(SCHR, u0, t), t, SCHR).values
    b = linear_evolve(SCHR, weighted_profile_derivative(u0, 0.0, SCHR), t).to_physical().values
    assert np.max(np.abs(a - b)) <= 1e-10


def test_weighted_derivative_affine_growth():
    g = Grid(1, 512, 1000.0)
    xi0, sigma = 0.8, 4.0
    xc = centered(g)
    u0 = Field(g, "physical", np.exp(-xc**2 / (2 * sigma**2) + 1j * xi0 * xc))
    ts = np.linspace(10, 20, 6)
    norms = [np.linalg.norm(weighted_profile_derivative(u0, t, SCHR).values) for t in ts]
    slope = np.polyfit(ts, norms, 1)[0]
    assert abs(slope / (SCHR.radial_derivative(xi0) * np.linalg.norm(u0.values)) - 1) <= 0.05


def test_weighted_derivative_rejects_2d():
    g = Grid(2, 8)
    with pytest.raises(InvalidParameter):
        weighted_profile_derivative(Field.zeros(g, "physical"), 0.0, make_dispersion("wave", dim=2))


# -- exports -------------------------------------------------------------------------------

def test_trajectory_csv(tmp_path):
    pb = problem(N=16)
    tr = evolve_profile(pb, random_data(pb.grid, 4, 1e-2), 0.2, 0.1)
    tr.to_csv(tmp_path / "traj.csv")
    tr.summary_csv(tmp_path / "summary.csv")
    rows = list(csv.reader(open(tmp_path / "traj.csv")))
    assert rows[0] == ["t", "component", "k", "re", "im"]
    assert len(rows) == 1 + 3 * 16
    rows = list(csv.reader(open(tmp_path / "summary.csv")))
    assert rows[0] == ["t", "component", "L2", "Linf"]
    assert len(rows) == 4
