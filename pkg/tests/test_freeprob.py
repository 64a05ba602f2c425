import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from sparse_rd.core import delta, gaussian, gaussian_family, theta
from sparse_rd.freeprob import (
    MAX_EIGEN_N,
    InversionError,
    SpectralMeasure,
    add_zero_atom,
    compress,
    dilate,
    drop_zero_atom,
    empirical_gram_spectrum,
    empirical_projected_spectrum,
    free_poisson,
    geometric_mean_eigenvalue,
    haar_orthogonal,
    ks_distance,
    limit_pair,
    log_potential,
    m_side_limit,
    mp_law,
    mutual_info_bound,
    point_mass,
    r_transform,
    stieltjes,
)

warnings.filterwarnings("ignore", category=integrate.IntegrationWarning)

RHO_GRID = [0.1, 0.35, 0.7, 1.0]


@pytest.fixture(scope="module")
def numeric_nu():
    """Compression of the zero-padded MP(0.2) law at omega = 0.5 by the fixed-point route."""
    mt = add_zero_atom(mp_law(0.2), 0.2)
    return mt, compress(mt, 0.5, numeric=True)


class TestMeasures:
    @pytest.mark.parametrize("rate,jump", [(0.2, 1.0), (1 / 0.35, 0.35), (1.0, 1.0), (3.0, 0.5)])
    def test_free_poisson_moments(self, rate, jump):
        m = free_poisson(rate, jump)
        assert m.mass() == pytest.approx(1.0, abs=1e-9)
        assert m.mean() == pytest.approx(rate * jump, abs=1e-9)
        second = np.real(m.integrate(lambda x: x * x))
        assert second == pytest.approx(rate * jump**2 * (1 + rate), abs=1e-8)

    def test_mp_is_rescaled_free_poisson(self):
        m = mp_law(0.35)
        assert m.family == pytest.approx((1 / 0.35, 0.35))
        lo, hi = m.hull
        assert lo == pytest.approx((1 - math.sqrt(0.35)) ** 2)
        assert hi == pytest.approx((1 + math.sqrt(0.35)) ** 2)
        assert m.zero_atom == 0

    def test_zero_padding_gives_unit_jump(self):
        mt = add_zero_atom(mp_law(0.2), 0.2)
        assert mt.family == pytest.approx((0.2, 1.0))
        assert mt.zero_atom == pytest.approx(0.8)
        ref = free_poisson(0.2, 1.0)
        xs = np.linspace(0.05, 2.8, 9)
        assert np.allclose(mt.cdf(xs), ref.cdf(xs), atol=1e-9)

    def test_drop_and_dilate(self):
        m = drop_zero_atom(free_poisson(0.4, 0.5))
        assert m.zero_atom == 0 and m.mass() == pytest.approx(1.0, abs=1e-9)
        d = dilate(m, 2.0)
        assert d.mean() == pytest.approx(2 * m.mean(), rel=1e-9)
        with pytest.raises(ValueError):
            drop_zero_atom(point_mass(0.0))

    def test_cdf_monotone(self):
        c = free_poisson(0.3, 1.0).cdf(np.linspace(-1, 4, 60))
        assert np.all(np.diff(c) >= -1e-12) and c[0] == 0 and c[-1] == pytest.approx(1.0, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            mp_law(1.5)
        with pytest.raises(ValueError):
            free_poisson(0, 1)
        with pytest.raises(ValueError):
            SpectralMeasure(atoms=((1.0, -0.1),))


class TestTransforms:
    @pytest.mark.parametrize("rho", RHO_GRID)
    def test_log_potential_of_mp(self, rho):
        assert log_potential(mp_law(rho)) == pytest.approx(math.exp(-1) * delta(rho), rel=1e-6)

    def test_log_potential_zero_atom(self):
        assert log_potential(free_poisson(0.5, 1.0)) == 0.0

    def test_stieltjes_point_mass(self):
        assert stieltjes(point_mass(2.0), 1j) == pytest.approx(1 / (2 - 1j))

    def test_stieltjes_mp_closed_form(self):
        # MP(r): S solves r z S^2 + (z + r - 1) S + 1 = 0 with Im S > 0 above the axis
        r, z = 0.35, 0.7 + 0.4j
        s = stieltjes(mp_law(r), z)
        assert abs(r * z * s * s + (z + r - 1) * s + 1) < 1e-10
        assert s.imag > 0

    def test_stieltjes_on_support(self):
        with pytest.raises(ValueError):
            stieltjes(mp_law(0.35), 1.0)

    @pytest.mark.parametrize("z", [-1.0, -0.3, 0.05, 0.2])
    @pytest.mark.parametrize("rate,jump", [(0.2, 1.0), (2.0, 0.5)])
    def test_free_poisson_r(self, rate, jump, z):
        assert r_transform(free_poisson(rate, jump), z) == pytest.approx(rate * jump / (1 - jump * z), abs=1e-10)

    def test_r_point_mass(self):
        assert r_transform(point_mass(3.0), 0.4) == pytest.approx(3.0, abs=1e-10)

    def test_r_out_of_range(self):
        with pytest.raises(InversionError):
            r_transform(mp_law(0.35), 50.0)
        with pytest.raises(ValueError):
            r_transform(mp_law(0.35), 0.0)


class TestCompression:
    @pytest.mark.parametrize("rho,omega", [(0.2, 0.5), (0.1, 0.35), (0.3, 0.35)])
    def test_closed_form_identity(self, rho, omega):
        mt = add_zero_atom(mp_law(rho), rho)
        nu = compress(mt, omega)
        for z in (-0.4, -0.1, 0.1, 0.25):
            assert r_transform(nu, z) == pytest.approx(r_transform(mt, omega * z), abs=1e-10)

    def test_identity_at_full_omega(self):
        mt = free_poisson(0.3)
        assert compress(mt, 1.0) is mt

    def test_numeric_route_cdf(self, numeric_nu):
        mt, nu = numeric_nu
        ref = compress(mt, 0.5)
        assert nu.zero_atom == pytest.approx(ref.zero_atom, abs=1e-12)
        assert nu.mass() == pytest.approx(1.0, abs=1e-9)
        xs = np.linspace(0.0, 2.0, 21)
        assert np.max(np.abs(nu.cdf(xs) - ref.cdf(xs))) < 1e-3

    @pytest.mark.parametrize("z", [-0.3, 0.2])
    def test_numeric_route_r(self, numeric_nu, z):
        mt, nu = numeric_nu
        assert abs(r_transform(nu, z) - r_transform(mt, 0.5 * z)) < 1e-4

    def test_numeric_non_family_input(self):
        # a two-atom law has no closed form; compare with the sampled compression
        mu = SpectralMeasure(atoms=((1.0, 0.5), (3.0, 0.5)))
        nu = compress(mu, 0.5)
        rng = np.random.default_rng(3)
        n = 800
        q = haar_orthogonal(n, rng)
        d = np.repeat([1.0, 3.0], n // 2)
        k = n // 2
        eig = np.linalg.eigvalsh((q[:k] * d) @ q[:k].T)
        assert ks_distance(eig, nu) < 0.05

    def test_m_side_limit_is_mp(self):
        rho, omega = 0.2, 0.5
        nu = m_side_limit(compress(add_zero_atom(mp_law(rho), rho), omega), omega)
        assert nu.family == pytest.approx((omega / rho, rho / omega))
        xs = np.linspace(0.1, 3.5, 12)
        assert np.allclose(nu.cdf(xs), mp_law(rho / omega).cdf(xs), atol=1e-9)

    def test_limit_pair_potentials(self):
        pair = limit_pair(0.2, 0.35)
        assert pair.g_mu == pytest.approx(math.exp(-1) * delta(0.2), rel=1e-9)
        assert pair.g_nu == pytest.approx(math.exp(-1) * delta(0.2 / 0.35), rel=1e-9)

    @pytest.mark.parametrize("rho", [0.05, 0.2, 0.34])
    @pytest.mark.parametrize("mu", [0.0, 0.7])
    def test_bound_from_potentials(self, rho, mu):
        f = gaussian_family(mu)
        pair = limit_pair(rho, 0.35)
        want = 0.5 * rho * math.log(pair.g_mu / (theta(0.35, f) * pair.g_nu))
        assert mutual_info_bound(rho, 0.35, f) == pytest.approx(want, abs=1e-9)


class TestRandomMatrices:
    def test_haar_orthogonal(self):
        q = haar_orthogonal(50, 1)
        assert np.allclose(q.T @ q, np.eye(50), atol=1e-12)

    def test_haar_sign_symmetric(self):
        # plain QR leaves a positive bias on the diagonal; the sign fix removes it
        diag = np.concatenate([np.diag(haar_orthogonal(20, s)) for s in range(300)])
        assert abs(diag.mean()) < 4 * diag.std() / math.sqrt(diag.size)

    def test_haar_first_column_uniform(self):
        # n * Q[0,0]^2 is approximately chi-square with one degree of freedom
        vals = np.array([haar_orthogonal(40, s)[0, 0] ** 2 * 40 for s in range(400)])
        assert abs(vals.mean() - 1) < 0.2

    @pytest.mark.slow
    def test_projected_spectrum_ks(self):
        eigs = empirical_projected_spectrum(1000, 0.2, 0.5, 7) / 0.5
        assert ks_distance(eigs, limit_pair(0.2, 0.5).nu) < 0.05

    def test_gram_geometric_mean(self):
        eigs = empirical_gram_spectrum(1000, 0.35, 8)
        want = math.exp(-1) * delta(0.35)
        assert abs(geometric_mean_eigenvalue(eigs) / want - 1) < 0.05

    def test_structural_zeros(self):
        eigs = empirical_projected_spectrum(200, 0.6, 0.3, 2)
        assert eigs.size == 120 and np.sum(eigs < 1e-10) == 120 - 60

    def test_size_limits(self):
        with pytest.raises(ValueError):
            empirical_projected_spectrum(50, 0.2, 0.5, 0)
        with pytest.raises(ValueError):
            empirical_gram_spectrum(MAX_EIGEN_N + 1, 0.2, 0)

    def test_geometric_mean_skips_zeros(self):
        assert geometric_mean_eigenvalue([0.0, 1e-14, 2.0, 8.0]) == pytest.approx(4.0)

    def test_theta_gaussian(self):
        assert theta(0.35, gaussian(0, 1)) == 1.0
