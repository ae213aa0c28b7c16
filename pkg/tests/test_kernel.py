import numpy as np
import pytest

from atomline.kernel import (KernelContext, bound_B, bound_F, bound_W,
                             kernel_derivative, kernel_matrix, kernel_tables,
                             region_extrema, tau_of, triangle_weights,
                             trig_poly_samples, weight_diagonal)
from atomline.signal_model import atoms


CTX = KernelContext.for_n(130)


class TestKernelDerivative:
    def test_value_at_zero(self):
        assert kernel_derivative(CTX, 0, 0.0) == pytest.approx(1.0, abs=1e-12)
        assert kernel_derivative(CTX, 1, 0.0) == pytest.approx(0.0, abs=1e-9)
        assert kernel_derivative(CTX, 3, 0.0) == pytest.approx(0.0, abs=1e-4)

    def test_second_derivative_at_zero(self):
        expected = -np.pi**2 * (130**2 - 4) / 3.0
        assert kernel_derivative(CTX, 2, 0.0) == pytest.approx(expected, rel=1e-12)
        assert CTX.tau == pytest.approx(-expected)
        assert CTX.tau >= 3.289 * 130**2

    def test_zero_at_multiple_of_inverse_M(self):
        ctx = KernelContext.for_n(8)
        assert kernel_derivative(ctx, 0, 0.25) == pytest.approx(0.0, abs=1e-14)

    def test_first_derivative_finite_difference(self):
        f, h = 0.003, 1e-9
        fd = (kernel_derivative(CTX, 0, f + h) - kernel_derivative(CTX, 0, f - h)) / (2 * h)
        assert kernel_derivative(CTX, 1, f) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("ell", [1, 2, 3, 4])
    def test_higher_orders_match_finite_differences(self, ell):
        rng = np.random.default_rng(ell)
        scale = (2 * np.pi * 130) ** ell
        for f in rng.uniform(0.01, 0.49, 8):
            h = 1e-6
            fd = (kernel_derivative(CTX, ell - 1, f + h)
                  - kernel_derivative(CTX, ell - 1, f - h)) / (2 * h)
            got = kernel_derivative(CTX, ell, f)
            assert abs(got - fd) < 1e-5 * max(abs(fd), 1e-6 * scale)

    def test_periodicity_and_parity(self):
        f = 0.1234
        assert kernel_derivative(CTX, 0, f + 1.0) == pytest.approx(
            kernel_derivative(CTX, 0, f), rel=1e-12)
        assert kernel_derivative(CTX, 1, -f) == pytest.approx(
            -kernel_derivative(CTX, 1, f), rel=1e-12)

    def test_range_and_positivity_on_grid(self):
        f = np.linspace(0, 1, 4001)
        vals = kernel_derivative(CTX, 0, f)
        assert np.all(vals >= -1e-14)
        assert np.all(vals <= 1 + 1e-12)
        interior = vals[(f > 1e-3) & (f < 1 - 1e-3)]
        assert interior.max() < 1.0

    def test_near_zero_representation_is_continuous(self):
        # the coefficient-sum fallback and the closed form agree at the seam
        seam = 0.05 / CTX.M
        for ell in range(5):
            lo = kernel_derivative(CTX, ell, seam * 0.999)
            hi = kernel_derivative(CTX, ell, seam * 1.001)
            scale = max(abs(lo), abs(hi), (2 * np.pi * CTX.n) ** ell * 1e-9)
            assert abs(hi - lo) < 1e-2 * scale


class TestWeights:
    def test_sum_equals_M(self):
        g = triangle_weights(65)
        assert g.sum() == pytest.approx(65.0, rel=1e-12)

    def test_endpoints_vanish(self):
        g = triangle_weights(65)
        assert g[0] == 0.0 and g[-1] == 0.0

    def test_peak_value(self):
        # exact convolution: g(0) = 2/3 + 1/(3M^2); forced by K(0) = 1
        g = triangle_weights(65)
        assert g[len(g) // 2] == pytest.approx(2 / 3 + 1 / (3 * 65**2), rel=1e-12)
        assert g.max() == g[len(g) // 2]

    def test_nonnegative_and_normalized(self):
        wd = weight_diagonal(65)
        assert np.all(wd.entries >= 0)
        assert wd.entries.sum() == pytest.approx(1.0, rel=1e-12)
        assert wd.entries.size == 4 * 65 + 1


class TestKernelMatrix:
    def test_diagonals(self):
        f = np.array([0.1, 0.33, 0.71])
        assert np.allclose(np.diag(kernel_matrix(CTX, 0, f)), 1.0, atol=1e-12)
        assert np.allclose(np.diag(kernel_matrix(CTX, 1, f)), 0.0, atol=1e-9)
        assert np.allclose(np.diag(kernel_matrix(CTX, 2, f)), -CTX.tau, rtol=1e-12)

    @pytest.mark.parametrize("ell,j", [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (2, 2)])
    def test_factorization_identity(self, ell, j):
        rng = np.random.default_rng(17 + ell + 3 * j)
        f1 = np.sort(rng.random(3))
        f2 = np.sort(rng.random(4))
        D = kernel_matrix(CTX, ell, f1, f2)
        t = np.arange(-CTX.n, CTX.n + 1)
        A1 = (1j * 2 * np.pi * t[:, None]) ** j * atoms(f1, CTX.n)
        A2 = (1j * 2 * np.pi * t[:, None]) ** (ell - j) * atoms(f2, CTX.n)
        explicit = (-1) ** j * A1.conj().T @ (CTX.z[:, None] * A2)
        assert np.max(np.abs(D - explicit)) < 1e-8 * CTX.tau ** (ell / 2)

    def test_matrix_norms_on_separated_support(self):
        rng = np.random.default_rng(23)
        n = CTX.n
        for _ in range(5):
            while True:
                f = np.sort(rng.random(4))
                gaps = np.diff(np.concatenate([f, [f[0] + 1]]))
                if gaps.min() >= 2.5 / n:
                    break
            D0 = kernel_matrix(CTX, 0, f)
            D1 = kernel_matrix(CTX, 1, f)
            D2 = kernel_matrix(CTX, 2, f)
            inf_norm = lambda A: np.abs(A).sum(axis=1).max()
            assert inf_norm(np.eye(4) - D0) <= 0.00755
            assert inf_norm(D1) / np.sqrt(CTX.tau) <= 0.00682
            assert inf_norm(np.eye(4) + D2 / CTX.tau) <= 0.0171


class TestEnvelopeBounds:
    def test_plugin_value_at_half(self):
        # s(1/2) = 1/(M * 0.5 * 2) = 1/M, so B0(1/2) = M^-4
        ctx = KernelContext(65)
        assert bound_B(ctx, 0, 0.5) == pytest.approx((1 / 65) ** 4, rel=1e-12)

    def test_domination_on_grid(self):
        f = np.linspace(1e-4, 0.5, 10000)
        for ell in range(5):
            B = bound_B(CTX, ell, f)
            K = np.abs(kernel_derivative(CTX, ell, f))
            assert np.all(B >= K * (1 - 1e-12))

    def test_monotone_nonincreasing(self):
        assert bound_B(CTX, 2, 0.25) > bound_B(CTX, 2, 0.5)
        f = np.linspace(0.01, 0.5, 500)
        for ell in range(5):
            B = bound_B(CTX, ell, f)
            assert np.all(np.diff(B) <= 1e-12)

    def test_domain_rejection(self):
        with pytest.raises(ValueError):
            bound_B(CTX, 0, 0.0)
        with pytest.raises(ValueError):
            bound_B(CTX, 0, 0.6)


class TestTailAndWindowBounds:
    def test_tail_bound_examples(self):
        n = CTX.n
        # published F0 row carries one extra near-lobe term; the faithful
        # two-sided formula must stay below the published 0.00755
        f0 = bound_F(CTX, 0, 2.5 / n, 0.0)
        assert f0 <= 0.00755
        f2 = bound_F(CTX, 2, 2.5 / n, 0.75 / n) / n**2
        assert f2 == pytest.approx(0.12639, rel=5e-3)

    def test_window_bound_example(self):
        n = CTX.n
        w0 = bound_W(CTX, 0, 0.75 / n, 1.25 / n)
        assert w0 == pytest.approx(0.70859, rel=5e-3)

    def test_preconditions(self):
        n = CTX.n
        with pytest.raises(ValueError):
            bound_F(CTX, 0, 2.0 / n, 0.0)
        with pytest.raises(ValueError):
            bound_F(CTX, 0, 2.5 / n, 0.9 / n)
        with pytest.raises(ValueError):
            bound_W(CTX, 0, 0.0, 0.25)


class TestRegionExtrema:
    def test_max_kernel_is_one_at_origin_interval(self):
        n = CTX.n
        assert region_extrema(CTX, 0, (0.0, 0.24 / n)) == pytest.approx(1.0, abs=1e-10)

    def test_extrema_below_published_bounds(self):
        n = CTX.n
        assert region_extrema(CTX, 1, (0.0, 0.24 / n)) <= 0.789569 * n
        assert region_extrema(CTX, 2, (0.0, 0.24 / n), signed=True) <= -2.35084 * n**2
        assert region_extrema(CTX, 3, (0.0, 0.002 / n)) <= 0.0649394 * n**3

    def test_fourth_derivative_peak(self):
        n = CTX.n
        got = region_extrema(CTX, 4, (0.0, 0.2404 / n)) / n**4
        assert got == pytest.approx(29.2227, rel=5e-3)


class TestTrigPolySamples:
    def test_matches_direct_evaluation(self):
        rng = np.random.default_rng(5)
        n = 16
        coeffs = rng.standard_normal(2 * n + 1) + 1j * rng.standard_normal(2 * n + 1)
        size = 128
        samples = trig_poly_samples(coeffs, size)
        t = np.arange(-n, n + 1)
        for m in (0, 1, 17, 100):
            direct = np.sum(coeffs * np.exp(-1j * 2 * np.pi * t * m / size))
            assert samples[m] == pytest.approx(direct, abs=1e-10)


class TestKernelTables:
    def test_anchor_reproduction(self):
        rows = kernel_tables(130)
        assert len(rows) == 53
        for row in rows:
            assert abs(row["ratio"] - 1.0) <= 5e-3, row["quantity"]

    def test_tau_formula(self):
        assert tau_of(130) == pytest.approx(np.pi**2 * (130**2 - 4) / 3, rel=1e-15)
