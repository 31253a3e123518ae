"""Priors, pseudo-likelihood against a brute-force oracle, the adaptive
walk's distributional correctness, determinism, and chain diagnostics."""
import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.stats import kstest, norm

import bayesbw as bw
from bayesbw.kernels import build_exclusion_index, residuals_loo
from bayesbw.sampler import (
    Block,
    RateReparam,
    adaptive_random_walk,
    batch_mean_sd,
    chain_log_likelihoods,
    log_prior_log_scale,
)
from bayesbw.simulation import DGPSpec, generate
from bayesbw.types import BandwidthSet


def brute_force_loglik(data, h, b, estimator="local_linear"):
    """Double loop over (i, J_i); independent of the vectorized path."""
    e = residuals_loo(data, h, estimator)
    n = len(e)
    total = 0.0
    for i in range(n):
        terms = []
        for j in range(n):
            if j == i:
                continue
            if abs(e[j] - e[i]) <= 1e-12 * max(1.0, abs(e[i])):
                continue
            terms.append(math.exp(-0.5 * ((e[i] - e[j]) / b) ** 2)
                         / (b * math.sqrt(2 * math.pi)))
        total += math.log(sum(terms) / len(terms))
    return total


class TestLogPseudoLikelihood:
    def test_two_residual_formula(self):
        # With two distinct residuals the likelihood collapses to
        # 2 log(phi((e1 - e2)/b)/b).
        from bayesbw.kernels import loo_density_ordinates
        e = np.array([0.4, -0.9])
        idx = build_exclusion_index(e)
        b = 0.8
        s = loo_density_ordinates(e, idx, b)
        got = float(np.log(s).sum())
        expected = 2.0 * math.log(
            bw.gaussian_kernel((e[0] - e[1]) / b) / b)
        assert got == pytest.approx(expected, abs=1e-12)

    def test_small_sample_brute_force(self):
        x = np.array([[0.1], [0.45], [0.9], [0.3], [0.7]])
        y = np.array([0.2, 1.0, -0.4, 0.8, 0.1])
        data = bw.Dataset(y=y, x=x)
        b = 0.8
        assert bw.log_pseudo_likelihood(data, [0.5], b) == pytest.approx(
            brute_force_loglik(data, [0.5], b), abs=1e-10)

    @pytest.mark.parametrize("n,d", [(6, 1), (12, 1), (20, 2), (15, 3)])
    def test_matches_brute_force(self, rng, n, d):
        data = bw.Dataset(y=rng.normal(size=n), x=rng.uniform(size=(n, d)))
        h = rng.uniform(0.3, 1.0, size=d)
        b = float(rng.uniform(0.2, 1.5))
        assert bw.log_pseudo_likelihood(data, h, b) == pytest.approx(
            brute_force_loglik(data, h, b), abs=1e-10)

    def test_tie_exclusion_case(self):
        # Duplicated observations force tied residuals.
        x = np.array([[0.1], [0.1], [0.4], [0.7], [0.9]])
        y = np.array([1.0, 1.0, 2.0, 0.5, 1.5])
        data = bw.Dataset(y=y, x=x)
        e = residuals_loo(data, [0.3])
        assert min(abs(e[0] - e[1]), 1.0) < 1e-12  # the tie is real
        got = bw.log_pseudo_likelihood(data, [0.3], 0.6)
        assert got == pytest.approx(brute_force_loglik(data, [0.3], 0.6), abs=1e-10)

    def test_small_b_tends_to_minus_inf(self, rng):
        data = bw.Dataset(y=rng.normal(size=10), x=rng.uniform(size=(10, 1)))
        values = [bw.log_pseudo_likelihood(data, [0.4], b)
                  for b in (0.5, 0.05, 0.005, 1e-4)]
        assert all(values[i + 1] < values[i] for i in range(2))
        assert values[-1] == -math.inf or values[-1] < -1e4

    def test_degeneracy_reports_cause(self, rng):
        x = np.linspace(0, 1000, 10)[:, None]
        data = bw.Dataset(y=rng.normal(size=10), x=x)
        info = {}
        assert bw.log_pseudo_likelihood(data, [1e-5], 0.3, info=info) == -math.inf
        assert "degenerate_cause" in info


class TestLogPrior:
    def test_inverse_gamma_fixture(self):
        # IG(1, 0.05) log density at 0.05 is log(20) - 1
        n = 1000
        b0sq = 0.05
        bset = BandwidthSet(h=[1.0], b=math.sqrt(b0sq) * n ** -0.2)
        prior = bw.PriorSpec(family="inverse_gamma")
        h0sq = (1.0 * n ** (1 / 5)) ** 2
        from scipy.stats import invgamma
        expected = (math.log(20.0) - 1.0) + invgamma.logpdf(h0sq, a=1, scale=0.05)
        assert bw.log_prior(bset, prior, n) == pytest.approx(expected, rel=1e-12)

    def test_exponential_at_origin_like_point(self):
        # Exp(tau=1) log density at z is -z; tiny bandwidths give z ~ 0
        prior = bw.PriorSpec(family="exponential", tau=1.0)
        bset = BandwidthSet(h=[1e-8], b=1e-8)
        assert bw.log_prior(bset, prior, 100) == pytest.approx(0.0, abs=1e-12)

    def test_exponential_general(self):
        prior = bw.PriorSpec(family="exponential", tau=2.0)
        bset = BandwidthSet(h=[0.5, 0.2], b=0.3)
        z = np.array([0.25, 0.04, 0.09])
        expected = float((math.log(2.0) - 2.0 * z).sum())
        assert bw.log_prior(bset, prior, 100) == pytest.approx(expected, rel=1e-12)

    def test_beta_uniform_is_flat(self):
        prior = bw.PriorSpec(family="beta_exponent")
        n = 500
        for expo in (0.1, 0.5, 0.9):
            bset = BandwidthSet(h=[n ** -expo], b=n ** -0.3)
            assert bw.log_prior(bset, prior, n) == pytest.approx(0.0, abs=1e-12)

    def test_beta_out_of_support(self):
        prior = bw.PriorSpec(family="beta_exponent")
        bset = BandwidthSet(h=[2.0], b=0.5)  # h > 1 means exponent < 0
        assert bw.log_prior(bset, prior, 500) == -math.inf

    @pytest.mark.parametrize("family,kwargs", [
        ("inverse_gamma", {}),
        ("exponential", {"tau": 1.3}),
        ("beta_exponent", {"psi_b": 2.0, "kappa_b": 3.0}),
    ])
    def test_log_scale_density_normalizes(self, family, kwargs):
        # With d=0 the log-scale prior density reduces to the b-component
        # alone; it must integrate to one over phi_b = log b.
        prior = bw.PriorSpec(family=family, **kwargs)
        n = 200
        if family == "beta_exponent":
            lo, hi = -math.log(n) + 1e-9, -1e-9
        else:
            lo, hi = -30.0, 10.0
        mass, _ = quad(
            lambda p: math.exp(log_prior_log_scale(np.array([p]), prior, n, 0)),
            lo, hi, limit=300)
        assert mass == pytest.approx(1.0, abs=1e-6)

    def test_log_scale_batch_matches_single(self, rng):
        prior = bw.PriorSpec()
        phis = rng.normal(-2, 0.5, size=(6, 3))
        batch = log_prior_log_scale(phis, prior, 300, 2)
        for i in range(6):
            assert batch[i] == pytest.approx(
                log_prior_log_scale(phis[i], prior, 300, 2), rel=1e-12)


class TestLogPosterior:
    def test_flat_beta_prior_equals_likelihood(self, rng):
        data = bw.Dataset(y=rng.normal(size=20), x=rng.uniform(size=(20, 1)))
        prior = bw.PriorSpec(family="beta_exponent")
        h, b = [0.2], 0.3
        assert bw.log_posterior(data, h, b, prior) == pytest.approx(
            bw.log_pseudo_likelihood(data, h, b), rel=1e-12)

    def test_sum_of_parts(self, rng):
        data = bw.Dataset(y=rng.normal(size=15), x=rng.uniform(size=(15, 1)))
        prior = bw.PriorSpec()
        h, b = [0.25], 0.4
        expected = bw.log_pseudo_likelihood(data, h, b) \
            + bw.log_prior(BandwidthSet(h=h, b=b), prior, data.n)
        assert bw.log_posterior(data, h, b, prior) == pytest.approx(expected, rel=1e-12)

    def test_additivity_in_likelihood(self, rng):
        data = bw.Dataset(y=rng.normal(size=15), x=rng.uniform(size=(15, 1)))
        prior = bw.PriorSpec()
        pairs = [([0.2], 0.3), ([0.4], 0.5)]
        deltas_post = (bw.log_posterior(data, *pairs[0], prior)
                       - bw.log_posterior(data, *pairs[1], prior))
        deltas_lik = (bw.log_pseudo_likelihood(data, *pairs[0])
                      - bw.log_pseudo_likelihood(data, *pairs[1]))
        deltas_prior = (
            bw.log_prior(BandwidthSet(h=pairs[0][0], b=pairs[0][1]), prior, data.n)
            - bw.log_prior(BandwidthSet(h=pairs[1][0], b=pairs[1][1]), prior, data.n))
        assert deltas_post == pytest.approx(deltas_lik + deltas_prior, rel=1e-10)


class TestRateReparam:
    def test_roundtrip(self):
        bset = BandwidthSet(h=[0.0607, 0.1608], b=0.2698)
        rp = RateReparam.from_bandwidths(bset, 1000)
        back = rp.to_bandwidths()
        np.testing.assert_allclose(back.h, bset.h, rtol=5e-16)
        assert back.b == pytest.approx(bset.b, rel=5e-16)

    def test_rates(self):
        rp = RateReparam(b0=1.0, h0=np.ones(3), n=1000)
        bset = rp.to_bandwidths()
        assert bset.b == pytest.approx(1000 ** -0.2, rel=1e-15)
        np.testing.assert_allclose(bset.h, 1000 ** (-1 / 7), rtol=1e-15)


class TestAdaptiveWalk:
    def test_standard_normal_target_ks(self):
        rng = np.random.default_rng(11)
        res = adaptive_random_walk(
            lambda x: -0.5 * float(x @ x),
            np.array([0.3]),
            [Block(idx=np.array([0]), target_accept=0.44)],
            burn_in=1000, draws=10000, rng=rng)
        rate = res.accepts[:, 0].mean()
        assert 0.38 <= rate <= 0.50
        x = res.states[:, 0]
        sif = bw.integrated_autocorr_time(x)
        thinned = x[:: max(1, int(math.ceil(sif)))]
        stat = kstest(thinned, norm.cdf)
        assert stat.pvalue > 0.01

    def test_two_blocks_reach_targets(self):
        rng = np.random.default_rng(5)
        cov_target = [Block(idx=np.array([0, 1]), target_accept=0.234),
                      Block(idx=np.array([2]), target_accept=0.44)]
        res = adaptive_random_walk(
            lambda x: -0.5 * float(x @ x), np.zeros(3), cov_target,
            burn_in=2000, draws=5000, rng=rng)
        assert res.accepts[:, 0].mean() == pytest.approx(0.234, abs=0.05)
        assert res.accepts[:, 1].mean() == pytest.approx(0.44, abs=0.05)

    def test_steps_frozen_after_burn_in(self):
        rng = np.random.default_rng(3)
        res = adaptive_random_walk(
            lambda x: -0.5 * float(x @ x), np.zeros(1),
            [Block(idx=np.array([0]), target_accept=0.44)],
            burn_in=200, draws=300, rng=rng)
        post = res.steps[200:, 0]
        assert (post == post[0]).all()


@pytest.fixture(scope="module")
def small_chain():
    gen = generate(DGPSpec(design="m1", error="gaussian_half", n=80, seed=2))
    cfg = bw.SamplerConfig(seed=13, burn_in=200, draws=300)
    return gen.dataset, bw.sample_posterior(gen.dataset, bw.PriorSpec(), cfg)


class TestSamplePosterior:
    def test_deterministic(self, small_chain):
        data, chain = small_chain
        cfg = bw.SamplerConfig(seed=13, burn_in=200, draws=300)
        again = bw.sample_posterior(data, bw.PriorSpec(), cfg)
        np.testing.assert_array_equal(chain.samples, again.samples)
        np.testing.assert_array_equal(chain.log_post, again.log_post)
        np.testing.assert_array_equal(chain.accept_h, again.accept_h)

    def test_positive_and_shapes(self, small_chain):
        _, chain = small_chain
        assert chain.samples.shape == (300, 2)
        assert (chain.samples > 0).all()
        assert chain.step_h.shape == (500,)

    def test_recorded_log_post_matches_public(self, small_chain):
        data, chain = small_chain
        prior = chain.meta.prior
        for i in (0, 150, 299):
            h, b = chain.samples[i, :-1], float(chain.samples[i, -1])
            direct = bw.log_posterior(data, h, b, prior)
            assert chain.log_post[i] == pytest.approx(direct, rel=1e-9)

    def test_chain_log_likelihood_reconstruction(self, small_chain):
        data, chain = small_chain
        ll = chain_log_likelihoods(chain)
        for i in (0, 299):
            h, b = chain.samples[i, :-1], float(chain.samples[i, -1])
            assert ll[i] == pytest.approx(
                bw.log_pseudo_likelihood(data, h, b), rel=1e-9)

    def test_requires_config(self, small_chain):
        data, _ = small_chain
        with pytest.raises(bw.ValidationError):
            bw.sample_posterior(data)

    def test_beta_family_runs(self):
        gen = generate(DGPSpec(design="m1", error="gaussian_half", n=60, seed=8))
        cfg = bw.SamplerConfig(seed=3, burn_in=150, draws=150)
        chain = bw.sample_posterior(
            gen.dataset, bw.PriorSpec(family="beta_exponent"), cfg)
        assert (chain.samples > 0).all()
        assert (chain.samples < 1).all()  # beta-exponent support keeps bw < 1

    def test_prior_dominated_posterior_matches_quadrature(self):
        # With three observations and one regressor the leave-one-out local
        # linear fit interpolates the other two points exactly, so the
        # residuals do not depend on h and the b-posterior is a 1-d integral
        # we can evaluate directly.
        x = np.array([[0.1], [0.5], [0.9]])
        y = np.array([0.3, 1.1, 0.2])
        data = bw.Dataset(y=y, x=x)
        beta_b = 40.0
        prior = bw.PriorSpec(family="inverse_gamma", beta_b=beta_b)
        n = data.n

        e = residuals_loo(data, [0.5])
        idx = build_exclusion_index(e)

        def loglik_b(b):
            from bayesbw.kernels import loo_density_ordinates
            s = loo_density_ordinates(e, idx, b)
            return float(np.log(s).sum())

        from scipy.stats import invgamma

        def unnorm(b0sq):
            b = math.sqrt(b0sq) * n ** -0.2
            return math.exp(loglik_b(b)
                            + invgamma.logpdf(b0sq, a=1.0, scale=beta_b))

        z, _ = quad(unnorm, 1e-3, 5e4, limit=500)
        m1, _ = quad(lambda v: v * unnorm(v), 1e-3, 5e4, limit=500)
        quadrature_mean_b0sq = m1 / z

        cfg = bw.SamplerConfig(seed=21, burn_in=2000, draws=20000)
        chain = bw.sample_posterior(data, prior, cfg)
        b0sq_draws = (chain.samples[:, -1] * n ** 0.2) ** 2
        assert b0sq_draws.mean() == pytest.approx(quadrature_mean_b0sq, rel=0.10)


class TestDiagnostics:
    def test_sif_iid(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=10000)
        assert 0.8 <= bw.integrated_autocorr_time(x) <= 1.3

    def test_sif_ar1(self):
        rho, reps = 0.5, 5
        vals = []
        for seed in range(reps):
            rng = np.random.default_rng(seed)
            eps = rng.normal(size=20000)
            x = np.empty(20000)
            x[0] = eps[0]
            for t in range(1, 20000):
                x[t] = rho * x[t - 1] + eps[t]
            vals.append(bw.integrated_autocorr_time(x))
        target = (1 + rho) / (1 - rho)
        assert np.mean(vals) == pytest.approx(target, rel=0.25)

    def test_sif_constant_chain_undefined(self):
        assert math.isnan(bw.integrated_autocorr_time(np.full(500, 2.0)))

    def test_batch_mean_sd_iid(self):
        rng = np.random.default_rng(1)
        x = rng.normal(size=10000)
        bm, truncated = batch_mean_sd(x)
        assert not truncated
        assert bm == pytest.approx(x.std(ddof=1) / math.sqrt(10000), rel=0.25)

    def test_batch_truncation_flag(self):
        rng = np.random.default_rng(2)
        _, truncated = batch_mean_sd(rng.normal(size=1037))
        assert truncated

    def test_summary_shape_and_order(self):
        rng = np.random.default_rng(4)
        draws = 400
        samples = np.column_stack([rng.uniform(0.5, 1.0, draws),
                                   rng.uniform(0.1, 0.2, draws)])
        from bayesbw.sampler import ChainMeta, PosteriorChain
        chain = PosteriorChain(
            samples=samples, log_post=rng.normal(size=draws),
            accept_h=rng.random(draws) < 0.23,
            accept_b=rng.random(draws) < 0.44,
            step_h=np.ones(draws + 100), step_b=np.ones(draws + 100),
            meta=ChainMeta(n=100, d=1, estimator="local_linear",
                           prior=bw.PriorSpec(),
                           config=bw.SamplerConfig(seed=0, burn_in=100,
                                                   draws=draws)))
        summary = bw.summarize_chain(chain)
        names = [p.name for p in summary.parameters]
        assert names == ["h_1", "b"]
        for p in summary.parameters:
            assert p.ci_low <= p.mean <= p.ci_high
            assert p.ci_low <= p.ci_high
