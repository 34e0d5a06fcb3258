import numpy as np
import pytest
from numpy.testing import assert_allclose

from kricci.extremes import (
    CertifyOptions,
    _batch_eval,
    _metric_factors,
    certify_k_ricci,
    h_orthocomplement,
    k_ricci_extreme_at,
    k_ricci_on,
)
from kricci.forms import (
    HermitianForm,
    b_form,
    hsc,
    random_bihermitian,
    random_hermitian,
    ricci_trace,
    require_real,
    shift_sigma,
    unit_sphere_samples,
)


def rng(seed=0):
    return np.random.default_rng(seed)


def random_unit(h, seed):
    return unit_sphere_samples(h, 1, rng(seed))[0]


class TestOrthocomplement:
    @pytest.mark.parametrize("n", [2, 3, 5])
    def test_frame_properties(self, n):
        h = random_hermitian(n, rng(n), positive=True)
        X = random_unit(h, 100 + n)
        Q = h_orthocomplement(h, X)
        assert Q.shape == (n, n - 1)
        gram = np.einsum("pi,pq,qj->ij", Q, h.entries, np.conj(Q))
        assert_allclose(gram, np.eye(n - 1), atol=1e-12)
        overlap = np.einsum("p,pq,qj->j", X, h.entries, np.conj(Q))
        assert_allclose(overlap, 0.0, atol=1e-12)

    def test_first_coordinate_zero_direction(self):
        # Exercises the branch where the flat first coordinate vanishes.
        h = HermitianForm.identity(3)
        X = np.array([0.0, 1.0, 0.0], dtype=complex)
        Q = h_orthocomplement(h, X)
        overlap = np.einsum("p,pj->j", X, np.conj(Q))
        assert_allclose(overlap, 0.0, atol=1e-14)


class TestKRicciValues:
    def test_model_value_is_minus_kplus1_sigma(self):
        # S = -sigma * B(h) has every k-Ricci value equal to -(k+1)*sigma.
        for n, sigma in [(2, 0.7), (4, 1.5)]:
            h = random_hermitian(n, rng(200 + n), positive=True)
            S = shift_sigma(
                type(b_form(h))(np.zeros((n,) * 4, dtype=complex)), h, -sigma
            )
            X = random_unit(h, 300 + n)
            for k in range(1, n + 1):
                val, basis = k_ricci_extreme_at(S, h, X, k)
                assert_allclose(val, -(k + 1) * sigma, rtol=1e-10)
                assert_allclose(k_ricci_on(S, h, basis), val, rtol=1e-10)

    def test_k1_is_hsc(self):
        h = random_hermitian(3, rng(1), positive=True)
        S = random_bihermitian(3, rng(2))
        X = random_unit(h, 3)
        val, _ = k_ricci_extreme_at(S, h, X, 1)
        assert_allclose(val, hsc(S, h, X), rtol=1e-10)

    def test_kn_is_ricci(self):
        # Over the full space the value is the Ricci form at the direction.
        n = 4
        h = random_hermitian(n, rng(4), positive=True)
        S = random_bihermitian(n, rng(5))
        X = random_unit(h, 6)
        val, _ = k_ricci_extreme_at(S, h, X, n)
        ric = ricci_trace(S, h)
        assert_allclose(val, require_real(ric(X)), rtol=1e-9)

    def test_max_dominates_min_and_any_frame(self):
        n, k = 4, 2
        h = random_hermitian(n, rng(7), positive=True)
        S = random_bihermitian(n, rng(8))
        X = random_unit(h, 9)
        hi, _ = k_ricci_extreme_at(S, h, X, k, "max")
        lo, _ = k_ricci_extreme_at(S, h, X, k, "min")
        assert hi >= lo
        # A frame completed with arbitrary orthocomplement vectors sits between.
        Q = h_orthocomplement(h, X)
        from kricci.forms import SubspaceBasis

        basis = SubspaceBasis(np.column_stack([X, Q[:, 0]]), h)
        mid = k_ricci_on(S, h, basis)
        assert lo - 1e-10 <= mid <= hi + 1e-10

    def test_witness_attains_value(self):
        h = random_hermitian(5, rng(10), positive=True)
        S = random_bihermitian(5, rng(11))
        X = random_unit(h, 12)
        val, basis = k_ricci_extreme_at(S, h, X, 3)
        assert_allclose(k_ricci_on(S, h, basis), val, rtol=1e-9, atol=1e-12)

    def test_scale_invariance_in_direction(self):
        h = random_hermitian(3, rng(13), positive=True)
        S = random_bihermitian(3, rng(14))
        X = random_unit(h, 15)
        v1, _ = k_ricci_extreme_at(S, h, X, 2)
        v2, _ = k_ricci_extreme_at(S, h, 3.7j * X, 2)
        assert_allclose(v2, v1, rtol=1e-10)

    def test_rejects_bad_k(self):
        h = random_hermitian(2, rng(16), positive=True)
        S = random_bihermitian(2, rng(17))
        with pytest.raises(ValueError):
            k_ricci_extreme_at(S, h, np.array([1.0, 0.0]), 3)
        with pytest.raises(ValueError):
            k_ricci_extreme_at(S, h, np.array([1.0, 0.0]), 0)


class TestBatchEval:
    def test_matches_single_point_route(self):
        n, k = 4, 3
        h = random_hermitian(n, rng(20), positive=True)
        S = random_bihermitian(n, rng(21))
        X = unit_sphere_samples(h, 9, rng(22))
        L, E = _metric_factors(h)
        (fb,) = _batch_eval(S.entries, h.entries, L, E, X, k)
        singles = [k_ricci_extreme_at(S, h, x, k)[0] for x in X]
        assert_allclose(fb, singles, rtol=1e-10)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_gradient_against_finite_differences(self, k):
        n = 3
        h = random_hermitian(n, rng(30 + k), positive=True)
        S = random_bihermitian(n, rng(40 + k))
        H = h.entries
        L, E = _metric_factors(h)
        X = unit_sphere_samples(h, 1, rng(50 + k))

        def value(x):
            return _batch_eval(S.entries, H, L, E, x[None, :], k)[0][0]

        f0, G = _batch_eval(S.entries, H, L, E, X, k, with_grad=True)
        G = G[0]
        x0 = X[0]
        r = rng(60 + k)
        for _ in range(4):
            d = r.standard_normal(n) + 1j * r.standard_normal(n)
            # Tangent of the normalised curve t -> (x0 + t d)/|x0 + t d|_h.
            proj = np.einsum("i,ij,j->", d, H, np.conj(x0)).real
            d_tan = d - proj * x0
            t = 1e-6
            xp = x0 + t * d
            xm = x0 - t * d
            xp = xp / np.sqrt(np.einsum("i,ij,j->", xp, H, np.conj(xp)).real)
            xm = xm / np.sqrt(np.einsum("i,ij,j->", xm, H, np.conj(xm)).real)
            fd = (value(xp) - value(xm)) / (2 * t)
            predicted = 2.0 * np.einsum("j,j->", np.conj(G), d_tan).real
            assert_allclose(fd, predicted, rtol=5e-5, atol=5e-7)


class TestCertify:
    def test_model_form_certificate_is_tight(self):
        n, k, sigma = 3, 2, 0.8
        h = random_hermitian(n, rng(70), positive=True)
        zero = random_bihermitian(n, rng(71), scale=0.0)
        S = shift_sigma(zero, h, -sigma)
        cert = certify_k_ricci(S, h, k, bound=-(k + 1) * sigma, rng=rng(72))
        assert cert.status == "satisfied"
        assert_allclose(cert.value, -(k + 1) * sigma, rtol=1e-9)
        assert abs(cert.margin) <= 1e-8

    def test_detects_violation(self):
        n, k = 3, 2
        h = random_hermitian(n, rng(73), positive=True)
        S = random_bihermitian(n, rng(74))
        # Certified max against an impossible bound far below the true sup.
        probe = certify_k_ricci(S, h, k, bound=np.inf, rng=rng(75))
        cert = certify_k_ricci(S, h, k, bound=probe.value - 1.0, rng=rng(76))
        assert cert.status == "violated"
        assert cert.margin < -0.5
        assert_allclose(k_ricci_on(S, h, cert.witness), cert.value, rtol=1e-8)

    def test_optimum_beats_dense_sampling(self):
        n, k = 3, 2
        opts = CertifyOptions(starts=32, presweep=256, max_iter=150)
        for seed in range(3):
            h = random_hermitian(n, rng(80 + seed), positive=True)
            S = random_bihermitian(n, rng(90 + seed))
            cert = certify_k_ricci(S, h, k, bound=np.inf, options=opts, rng=rng(seed))
            L, E = _metric_factors(h)
            sample = unit_sphere_samples(h, 20_000, rng(100 + seed))
            vals = _batch_eval(S.entries, h.entries, L, E, sample, k)[0]
            assert cert.value >= vals.max() - 1e-7

    def test_deterministic_under_seed(self):
        n, k = 3, 2
        h = random_hermitian(n, rng(110), positive=True)
        S = random_bihermitian(n, rng(111))
        a = certify_k_ricci(S, h, k, bound=0.0, rng=rng(7))
        b = certify_k_ricci(S, h, k, bound=0.0, rng=rng(7))
        assert a.value == b.value
        assert a.status == b.status
        assert_allclose(a.witness.columns, b.witness.columns, atol=0)

    def test_k1_certify_matches_hsc_sampling(self):
        n = 2
        h = random_hermitian(n, rng(112), positive=True)
        S = random_bihermitian(n, rng(113))
        cert = certify_k_ricci(S, h, 1, bound=np.inf, rng=rng(114))
        sample = unit_sphere_samples(h, 5000, rng(115))
        best = max(hsc(S, h, x) for x in sample)
        assert cert.value >= best - 1e-7
