import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import optimize

from sparse_rd.bounds import (
    FIGURE_ALPHA,
    RateDistortionPoint,
    _scan_lower_bound,
    corollary_holds,
    corollary_threshold,
    fano_gap,
    figure_curve,
    general_source_rate,
    lb_excludes,
    lower_bound_rate,
    upper_bound_rate,
)
from sparse_rd.core import binary_entropy, delta, discrete, gaussian, gaussian_family, laplace, uniform
from sparse_rd.freeprob import mutual_info_bound
from sparse_rd.hypothesis import MixtureModel, epsilon

OMEGA = 0.35
# mpmath, 40 digits
COROLLARY_03 = 0.37528970255740515
MU_STAR = 0.84804181981051179
MI_02 = 0.025710080996643631
MI_034 = 0.11934335619990265


def lhs(rho, omega, th):
    """Independent restatement of the rate-side bound with theta given."""
    d = lambda r: (1 - r) ** (1 - 1 / r) if r < 1 else 1.0  # noqa: E731
    return 0.5 * rho * math.log(d(rho) / (th * d(rho / omega)))


class TestGeneral:
    @pytest.mark.parametrize("alpha", np.linspace(0, 0.99, 12))
    def test_formulas(self, alpha):
        assert general_source_rate(OMEGA, alpha, True) == OMEGA
        assert general_source_rate(OMEGA, alpha, False) == pytest.approx((1 - alpha) * OMEGA, abs=1e-15)

    def test_alpha_one(self):
        assert general_source_rate(OMEGA, 1.0, True) == 0.0
        assert general_source_rate(OMEGA, 1.0, False) == 0.0
        assert lower_bound_rate(1.0, OMEGA, gaussian(0, 1)) == 0.0
        assert upper_bound_rate(1.0, OMEGA, gaussian(0, 1)) == 0.0

    @pytest.mark.parametrize("omega,alpha", [(0, 0.3), (1, 0.3), (0.3, -0.1), (0.3, 1.2)])
    def test_domain(self, omega, alpha):
        with pytest.raises(ValueError):
            general_source_rate(omega, alpha)

    def test_point_validation(self):
        with pytest.raises(ValueError):
            RateDistortionPoint(0.3, 0.2, "nonsense")
        with pytest.raises(ValueError):
            RateDistortionPoint(0.3, 1.5, "lower_bound")


class TestLowerBound:
    def test_oracles(self):
        f = gaussian(0, 1)
        assert mutual_info_bound(0.2, OMEGA, f) == pytest.approx(MI_02, rel=1e-13)
        assert mutual_info_bound(0.34, OMEGA, f) == pytest.approx(MI_034, rel=1e-13)
        assert corollary_threshold(OMEGA, 0.3) == pytest.approx(COROLLARY_03, rel=1e-13)

    def test_gap(self):
        assert fano_gap(0.35, 0.3) == pytest.approx(binary_entropy(0.35) - binary_entropy(0.105))

    def test_corollary_plateau(self):
        for mu in np.linspace(0, 0.84, 15):
            f = gaussian_family(mu)
            assert corollary_holds(0.3, OMEGA, f)
            assert lower_bound_rate(0.3, OMEGA, f) == OMEGA

    def test_corollary_is_the_limit_of_the_scan(self):
        # where the corollary holds every rate below omega is excluded
        f = gaussian(0, 1)
        for rho in np.linspace(0.01, 0.349, 40):
            assert lb_excludes(rho, 0.3, OMEGA, f)
        assert _scan_lower_bound(0.3, OMEGA, f, 2000) == pytest.approx(OMEGA, abs=1e-6)

    @pytest.mark.parametrize("alpha,mu", [(0.725, 0.0), (0.95, 0.0), (0.95, 0.6), (0.5, 0.95), (0.3, 0.9)])
    def test_scan_matches_root(self, alpha, mu):
        f = gaussian_family(mu)
        assert not corollary_holds(alpha, OMEGA, f)
        gap = binary_entropy(OMEGA) - binary_entropy(alpha * OMEGA)
        th = (1 - mu * mu) / (1 - OMEGA * mu * mu)
        g = lambda r: lhs(r, OMEGA, th) - gap  # noqa: E731
        # the bound is excluded below its last crossing under omega
        rs = np.linspace(1e-6, OMEGA - 1e-9, 4001)
        vals = np.array([g(r) for r in rs])
        j = np.flatnonzero(vals < 0)[-1]
        root = optimize.brentq(g, rs[j], rs[j + 1], xtol=1e-14)
        assert lower_bound_rate(alpha, OMEGA, f) == pytest.approx(root, abs=2e-8)

    def test_discrete_has_no_bound(self):
        assert lower_bound_rate(0.3, OMEGA, discrete([-1, 1])) == 0.0

    def test_no_exclusion_at_or_above_omega(self):
        assert not lb_excludes(0.35, 0.3, OMEGA, gaussian(0, 1))
        assert not lb_excludes(0.6, 0.3, OMEGA, gaussian(0, 1))

    @settings(max_examples=40, deadline=None)
    @given(st.floats(0.05, 0.95), st.floats(0.1, 0.9), st.floats(0.05, 1.0))
    def test_monotone_in_theta(self, alpha, omega, th_scale):
        # smaller entropy power excludes fewer rates
        f_hi = gaussian(0, 1)
        f_lo = gaussian_family(math.sqrt((1 - th_scale) / (1 - omega * th_scale)) if th_scale < 1 else 0.0)
        assert lower_bound_rate(alpha, omega, f_lo, 2000) <= lower_bound_rate(alpha, omega, f_hi, 2000) + 1e-7

    @pytest.mark.parametrize("f", [uniform(1, 2), laplace(0, 1)], ids=["uniform", "laplace"])
    def test_custom_laws(self, f):
        lo = lower_bound_rate(0.9, OMEGA, f)
        assert 0 <= lo <= OMEGA


class TestUpperBound:
    @pytest.mark.parametrize("alpha,mu", [(0.95, 0.0), (0.95, 0.5), (0.95, 0.95), (0.93, 0.3)])
    def test_epsilon_hits_target(self, alpha, mu):
        f = gaussian_family(mu)
        r = upper_bound_rate(alpha, OMEGA, f)
        assert 0 < r < OMEGA
        assert epsilon(MixtureModel(r, OMEGA, f)) == pytest.approx(alpha * OMEGA, abs=1e-7)

    def test_caps_at_omega(self):
        assert upper_bound_rate(0.3, OMEGA, gaussian(0, 1)) == OMEGA

    def test_trivial_alpha(self):
        # epsilon never exceeds min(omega, 1 - omega), so a large alpha needs no samples
        assert upper_bound_rate(0.99, 0.6, gaussian(0, 1)) == 0.0

    def test_monotone_in_alpha(self):
        vals = [upper_bound_rate(a, OMEGA, gaussian(0, 1)) for a in np.linspace(0.6, 0.99, 8)]
        assert np.all(np.diff(vals) <= 1e-9)

    def test_discrete(self):
        r = upper_bound_rate(0.8, OMEGA, discrete([-1, 1]))
        assert 0 < r <= OMEGA


class TestFigures:
    def test_figure1(self):
        pts = figure_curve(1)
        assert len(pts) == 200
        uni = np.array([p.rho for p in pts[::2]]) / OMEGA
        basis = np.array([p.rho for p in pts[1::2]]) / OMEGA
        alphas = np.array([p.alpha for p in pts[::2]])
        ok = alphas < 1
        assert np.all(np.abs(uni[ok] - 1) <= 1e-12)
        assert np.all(np.abs(basis[ok] - (1 - alphas[ok])) <= 1e-12)

    def test_figure_alphas(self):
        assert FIGURE_ALPHA == {2: 0.3, 3: 0.95}

    def test_figure2_shape(self):
        pts = figure_curve(2, grid=[0.0, 0.5, 0.9])
        assert [p.kind for p in pts[:2]] == ["lower_bound", "upper_bound"]
        lows = [p.rho for p in pts[::2]]
        assert lows[0] == lows[1] == OMEGA and lows[2] < OMEGA

    def test_unknown_figure(self):
        with pytest.raises(ValueError):
            figure_curve(4)


def mu_star_closed_form(omega, alpha):
    c = corollary_threshold(omega, alpha)
    return math.sqrt((1 - c) / (1 - c * omega))


def test_mu_star_oracle():
    assert mu_star_closed_form(OMEGA, 0.3) == pytest.approx(MU_STAR, abs=1e-13)
    assert delta(OMEGA) > 0
