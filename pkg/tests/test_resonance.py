import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from resonance_lab.dispersion import make_dispersion, make_system
from resonance_lab.errors import InvalidParameter, UnsupportedMode
from resonance_lab.resonance import (
    GridSpec2,
    ResonantSets,
    ZeroSet,
    classify_homogeneous,
    compute_resonant_sets,
    dxi_zero_containment,
    fit_radial_R,
    make_phase,
    null_ratio_report,
    phase_jet,
    project_and_separate,
)

H = 0.01
SQ = GridSpec2((-2.0, 2.0), (-2.0, 2.0), H)


@pytest.fixture(scope="module")
def schrodinger_sets():
    return compute_resonant_sets(make_phase(make_dispersion("schrodinger")), SQ, H)


def dist_T(xi, eta):
    """Distance to the analytic T = {eta = 0} u {eta = xi} of the Schrodinger ++ phase."""
    return np.minimum(np.abs(eta), np.abs(eta - xi) / math.sqrt(2))


def dist_S(xi, eta):
    return np.abs(2 * eta - xi) / math.sqrt(5)


def mixed_system(h=H):
    return make_system([make_dispersion("schrodinger"),
                        make_dispersion("half_wave", grid_spacing=h),
                        make_dispersion("half_wave", grid_spacing=h)])


# -- phase -------------------------------------------------------------------

def test_phase_examples():
    ph = make_phase(make_dispersion("schrodinger"))
    phi, ge, gx = phase_jet(ph, 2.0, 1.0)
    assert (phi, ge, gx) == (2.0, 0.0, 2.0)


def test_phase_invalid_index():
    with pytest.raises(InvalidParameter):
        make_phase(make_dispersion("schrodinger"), 1, 2, 1)


# dyadic points keep xi - (xi - eta) == eta exact in floating point
dyadic = st.integers(-320, 320).map(lambda n: n / 64)


@settings(max_examples=100, deadline=None)
@given(dyadic, dyadic, st.sampled_from([1, -1]), st.sampled_from([1, -1]))
def test_swap_symmetry(xi, eta, e1, e2):
    sys_ = make_system([make_dispersion("schrodinger"), make_dispersion("klein_gordon", mass=1),
                        make_dispersion("homogeneous", alpha=1.5)])
    a = make_phase(sys_, 1, 2, 3, e1, e2).value(xi, eta)
    b = make_phase(sys_, 1, 3, 2, e2, e1).value(xi, xi - eta)
    assert a == b


@settings(max_examples=100, deadline=None)
@given(st.floats(-5, 5), st.floats(-5, 5), st.sampled_from(["++", "--", "+-", "-+"]))
def test_gradient_sum_identity(xi, eta, signs):
    sys_ = make_system([make_dispersion("schrodinger"), make_dispersion("klein_gordon", mass=1),
                        make_dispersion("klein_gordon", mass=2)])
    e1, e2 = (1 if s == "+" else -1 for s in signs)
    ph = make_phase(sys_, 1, 2, 3, e1, e2)
    lhs = ph.grad_xi(xi, eta) + ph.grad_eta(xi, eta)
    rhs = sys_.component(1).gradient(xi) - e1 * sys_.component(2).gradient(eta)
    assert abs(lhs - rhs) <= 1e-12


def test_phase_jet_vs_finite_difference():
    rng = np.random.default_rng(3)
    ph = make_phase(make_system([make_dispersion("klein_gordon", mass=1)] * 3), 1, 1, 1, 1, -1)
    for xi, eta in rng.uniform(-3, 3, size=(20, 2)):
        h = 1e-5 * (1 + abs(xi) + abs(eta))
        fd_eta = (ph.value(xi, eta + h) - ph.value(xi, eta - h)) / (2 * h)
        fd_xi = (ph.value(xi + h, eta) - ph.value(xi - h, eta)) / (2 * h)
        _, ge, gx = phase_jet(ph, xi, eta)
        assert abs(ge - fd_eta) <= 1e-6 * max(1, abs(ge))
        assert abs(gx - fd_xi) <= 1e-6 * max(1, abs(gx))


def test_phase_zero_on_eta_zero():
    for kind in ("schrodinger", "wave"):
        ph = make_phase(make_dispersion(kind))
        xi = np.linspace(-3, 3, 13)
        assert np.all(ph.value(xi, 0 * xi) == 0)


def test_minus_minus_nonnegative():
    ph = make_phase(make_dispersion("homogeneous", alpha=1.5), eps1=-1, eps2=-1)
    XI, ETA = SQ.nodes(1)
    assert np.all(ph.value(XI, ETA) >= 0)


# -- resonant sets -----------------------------------------------------------

def test_schrodinger_sets_geometry(schrodinger_sets):
    s = schrodinger_sets
    assert np.max(dist_S(s.S.xi, s.S.eta)) <= H
    assert np.max(dist_T(s.T.xi, s.T.eta)) <= H
    assert np.max(np.hypot(s.R.xi, s.R.eta)) <= 2 * H
    assert len(s.R) >= 1


def test_zero_set_band_invariant(schrodinger_sets):
    s = schrodinger_sets
    ph = s.phase
    assert np.all(np.abs(ph.value(s.T.xi, s.T.eta)) <= H)
    assert np.all(np.abs(ph.grad_eta(s.S.xi, s.S.eta)) <= H)
    # R lies in both T and S up to band_tol
    assert np.all(np.abs(ph.value(s.R.xi, s.R.eta)) <= H)
    assert np.all(np.abs(ph.grad_eta(s.R.xi, s.R.eta)) <= H)


def test_dist_to_R(schrodinger_sets):
    d = schrodinger_sets.dist_to_R
    assert np.all(d >= 0)
    XI, ETA = SQ.nodes(1)
    on_R = (np.abs(XI) < 1e-12) & (np.abs(ETA) < 1e-12)
    assert d[on_R] == 0
    # exact distance to the single R sample at the origin
    np.testing.assert_allclose(d, np.hypot(XI, ETA), atol=1e-12)
    # 1-Lipschitz across neighbouring nodes
    assert np.max(np.abs(np.diff(d, axis=0))) <= H * math.sqrt(2) + 1e-12
    assert np.max(np.abs(np.diff(d, axis=1))) <= H * math.sqrt(2) + 1e-12


def offset_grid(h):
    # start off the lattice of multiples of h so every crossing is interpolated
    lo = -2.0 + 0.37 * h
    return GridSpec2((lo, 2.0), (lo, 2.0), h)


def test_curve_convergence():
    ph = make_phase(make_dispersion("schrodinger"))
    devs = {}
    for h in (0.04, 0.02, 0.01):
        s = compute_resonant_sets(ph, offset_grid(h), h)
        devs[h] = (np.max(dist_T(s.T.xi, s.T.eta)), np.max(dist_S(s.S.xi, s.S.eta)))
    for coarse, fine in ((0.04, 0.02), (0.02, 0.01)):
        # the offset grids are similar, so first-order convergence halves the
        # deviation exactly; the slack only absorbs rounding
        assert devs[fine][0] <= 0.5 * devs[coarse][0] * (1 + 1e-9)
        # d_eta phi is linear, so S is reproduced to rounding
        assert devs[fine][1] <= 1e-12


def test_klein_gordon_empty_T():
    ph = make_phase(make_dispersion("klein_gordon", mass=1))
    g = GridSpec2((-3.0, 3.0), (-3.0, 3.0), H)
    s = compute_resonant_sets(ph, g, H)
    assert s.T.empty and s.R.empty
    XI, ETA = g.nodes(1)
    assert np.min(np.abs(ph.value(XI, ETA))) >= 0.1
    assert np.all(s.dist_to_R > 1e29)


def test_minus_minus_alpha2_point():
    ph = make_phase(make_dispersion("homogeneous", alpha=2), eps1=-1, eps2=-1)
    s = compute_resonant_sets(ph, SQ, H)
    for zs in (s.T, s.R):
        assert len(zs) >= 1
        assert np.max(np.hypot(zs.xi, zs.eta)) <= H


def test_curve_mode_rejects_d2():
    ph = make_phase(make_dispersion("schrodinger", dim=2))
    with pytest.raises(UnsupportedMode):
        compute_resonant_sets(ph, GridSpec2((-1, 1), (-1, 1), 0.25), 0.1)


def test_band_mode_d2():
    ph = make_phase(make_dispersion("schrodinger", dim=2))
    g = GridSpec2((-1.0, 1.0), (-1.0, 1.0), 0.25, mode="band")
    s = compute_resonant_sets(ph, g, 1e-9)
    assert s.dist_to_R.shape == (9, 9, 9, 9)
    # phi = 2 eta.(xi - eta): every R node is a node where both conditions hold
    assert np.all(np.abs(ph.value(s.R.xi, s.R.eta)) <= 1e-9)
    np.testing.assert_allclose(s.R.points, 0.0, atol=1e-12)


def test_invalid_grid_and_tol():
    with pytest.raises(InvalidParameter):
        GridSpec2((0, 1), (0, 1), 0.0)
    with pytest.raises(InvalidParameter):
        GridSpec2((1, 0), (0, 1), 0.1)
    with pytest.raises(InvalidParameter):
        compute_resonant_sets(make_phase(make_dispersion("schrodinger")), SQ, 0.0)


def test_csv_export(tmp_path, schrodinger_sets):
    path = tmp_path / "sets.csv"
    schrodinger_sets.to_csv(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "set_label,xi,eta"
    labels = {ln.split(",")[0] for ln in lines[1:]}
    assert labels == {"T", "S", "R"}
    assert len(lines) - 1 == sum(len(z) for z in (schrodinger_sets.T, schrodinger_sets.S,
                                                  schrodinger_sets.R))


# -- separation --------------------------------------------------------------

def fake_sets(R_points):
    pts = np.asarray(R_points, float).reshape(-1, 2)
    ph = make_phase(make_dispersion("schrodinger"))
    z = ZeroSet("R", pts, H)
    return ResonantSets(ph, SQ, z, z, z, np.zeros((1, 1)))


def test_separation_single_point():
    sep = project_and_separate(fake_sets([[1.0, 0.5]]), 0.1)
    np.testing.assert_array_equal(sep.outcome, [1.0])
    np.testing.assert_array_equal(sep.source, [0.5, 0.5])
    assert sep.separated


def test_separation_empty():
    assert project_and_separate(fake_sets(np.zeros((0, 2))), 0.1).separated


def test_separation_mixed_system():
    s = compute_resonant_sets(make_phase(mixed_system(), 1, 2, 3), SQ, H)
    sep = project_and_separate(s, 0.01)
    assert not sep.separated
    assert np.all(np.abs(np.abs(sep.outcome) - 1) <= 2 * H)
    assert np.all(np.abs(sep.source) <= 1 + 2 * H)


# -- null forms and d_xi phi -------------------------------------------------

def test_null_ratio_examples():
    ph = make_phase(make_dispersion("schrodinger"))
    bands = [0.4, 0.2, 0.1, 0.05]
    rep = null_ratio_report(lambda xi, eta: ph.value(xi, eta), ph, SQ, bands)
    np.testing.assert_allclose(rep["time_ratio_sup"], 1.0)
    assert rep["time_verdict"] == "bounded"
    rep = null_ratio_report(lambda xi, eta: np.ones_like(xi), ph, SQ, bands)
    assert rep["time_verdict"] == "divergent like 1/b"
    rep = null_ratio_report(lambda xi, eta: ph.grad_eta(xi, eta), ph, SQ, bands)
    np.testing.assert_allclose(rep["space_ratio_sup"], 1.0)
    assert rep["space_verdict"] == "bounded"
    with pytest.raises(InvalidParameter):
        null_ratio_report(lambda xi, eta: 1.0, ph, SQ, [0.1, 0.2])


def test_dxi_containment():
    ph = make_phase(make_dispersion("wave", grid_spacing=H))
    s = compute_resonant_sets(ph, GridSpec2((0.5, 2.0), (0.1, 0.4), H), H)
    assert dxi_zero_containment(ph, s)["contains_T"]
    ph = make_phase(make_dispersion("schrodinger"), eps1=1, eps2=-1)
    s = compute_resonant_sets(ph, SQ, H)
    rep = dxi_zero_containment(ph, s)
    assert not rep["contains_R"]
    kg = make_phase(make_dispersion("klein_gordon", mass=1))
    s = compute_resonant_sets(kg, GridSpec2((-3.0, 3.0), (-3.0, 3.0), 0.05), 0.05)
    assert dxi_zero_containment(kg, s)["contains_R"]


# -- classification ----------------------------------------------------------

def test_classify_plus_minus_alpha2():
    rep = classify_homogeneous(2.0, "+-", SQ)
    v = rep.verdict("R_is_xi_zero")
    assert v.passed and v.deviation <= 2 * H
    assert rep.passed


def test_classify_wave_colinear():
    rep = classify_homogeneous(1.0, "++", SQ)
    assert rep.verdict("T_positively_colinear").passed
    assert rep.passed


def test_classify_plus_plus_alpha2_discrepancy():
    rep = classify_homogeneous(2.0, "++", SQ)
    lit = rep.verdict("T_trivial")
    assert not lit.passed and lit.expected_failure
    assert rep.verdict("T_trivial_off_degenerate_lines").passed
    assert rep.verdict("discrepancy_note_emitted").passed
    assert rep.notes
    assert rep.passed


@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.0])
def test_classify_minus_minus_trivial(alpha):
    rep = classify_homogeneous(alpha, "--", SQ)
    assert rep.verdict("T_trivial").passed


def test_classification_json(tmp_path):
    rep = classify_homogeneous(2.0, "++", SQ)
    data = json.loads(rep.to_json(tmp_path / "c.json"))
    assert {"name", "pass", "deviation", "note"} <= set(data["verdicts"][0])
    assert json.loads((tmp_path / "c.json").read_text()) == data


# -- radial form ----------------------------------------------------------------

def test_radial_mixed_system():
    s = compute_resonant_sets(make_phase(mixed_system(), 1, 2, 3), SQ, H)
    fit = fit_radial_R(s, 2 * H)
    assert fit.form == "sphere_ray"
    assert abs(fit.R0 - 1) <= 2 * H
    lo, hi = fit.lambda_range
    assert 0 <= lo <= hi <= 1


def test_radial_klein_gordon_empty():
    g = GridSpec2((-3.0, 3.0), (-3.0, 3.0), H)
    s = compute_resonant_sets(make_phase(make_dispersion("klein_gordon", mass=1)), g, H)
    assert fit_radial_R(s, 2 * H).form == "empty"


def test_radial_origin_point(schrodinger_sets):
    fit = fit_radial_R(schrodinger_sets, 2 * H)
    assert fit.form == "sphere_ray" and fit.R0 == 0
