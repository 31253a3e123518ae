"""Data-generating designs, error laws, and the replication harness."""
import math

import numpy as np
import pytest
from scipy.integrate import quad

import bayesbw as bw
from bayesbw.errors import ValidationError
from bayesbw.sampler import SamplerConfig
from bayesbw.simulation import (
    DGPSpec,
    design_m1,
    design_m2,
    generate,
    run_experiment,
    run_replication,
)


class TestDesigns:
    def test_m1_analytic_point(self):
        # cos(pi/2) + sin(pi/2) = 1 at x = 0.25
        assert design_m1(np.array([[0.25]]))[0] == pytest.approx(1.0, abs=1e-12)

    def test_m2_analytic_point(self):
        # sin(pi/2) + cos(0) + 4 = 6 at (0.25, 0, 0)
        assert design_m2(np.array([[0.25, 0.0, 0.0]]))[0] == pytest.approx(6.0, abs=1e-12)

    def test_m1_range(self):
        x = np.linspace(0, 1, 200)[:, None]
        vals = design_m1(x)
        assert vals.max() == pytest.approx(math.sqrt(2), abs=1e-3)
        assert vals.min() == pytest.approx(-math.sqrt(2), abs=1e-3)


class TestGenerate:
    def test_shapes_and_support(self):
        gen = generate(DGPSpec(design="m2", error="mixture", n=150, seed=4))
        assert gen.dataset.n == 150 and gen.dataset.d == 3
        assert (gen.dataset.x >= 0).all() and (gen.dataset.x <= 1).all()
        assert gen.sigma_max == 0.8

    def test_deterministic_per_seed(self):
        a = generate(DGPSpec(design="m1", error="gaussian_half", n=80, seed=9))
        c = generate(DGPSpec(design="m1", error="gaussian_half", n=80, seed=9))
        np.testing.assert_array_equal(a.dataset.y, c.dataset.y)
        d = generate(DGPSpec(design="m1", error="gaussian_half", n=80, seed=10))
        assert not np.array_equal(a.dataset.y, d.dataset.y)

    def test_mixture_moments(self):
        gen = generate(DGPSpec(design="m1", error="mixture", n=10 ** 6, seed=2))
        eps = gen.dataset.y - gen.m_true(gen.dataset.x)
        assert eps.var() == pytest.approx(0.304, rel=0.01)

    def test_gaussian_moments(self):
        gen = generate(DGPSpec(design="m1", error="gaussian_half", n=10 ** 6, seed=2))
        eps = gen.dataset.y - gen.m_true(gen.dataset.x)
        assert eps.std() == pytest.approx(0.5, rel=0.01)

    def test_truth_density_mass(self):
        for error in ("gaussian_half", "mixture"):
            gen = generate(DGPSpec(design="m1", error=error, n=60, seed=1))
            mass, _ = quad(gen.error_density_true, -10, 10, limit=200)
            assert mass == pytest.approx(1.0, abs=1e-9)

    def test_rejects_unknown_tags(self):
        with pytest.raises(ValidationError):
            DGPSpec(design="m9", error="mixture", n=100, seed=0)
        with pytest.raises(ValidationError):
            DGPSpec(design="m1", error="cauchy", n=100, seed=0)
        with pytest.raises(ValidationError):
            DGPSpec(design="m1", error="mixture", n=10, seed=0)


QUICK_CFG = SamplerConfig(seed=0, burn_in=150, draws=150)


class TestReplication:
    def test_rot_and_cv_cells(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=12)
        records = run_replication(spec, 0, ("rot", "cv"), QUICK_CFG)
        by_method = {r.method: r for r in records}
        assert by_method["rot"].failure is None
        assert by_method["rot"].ise_regression > 0
        assert by_method["rot"].ise_density_rot > 0
        assert by_method["rot"].ise_density_lcv > 0
        assert by_method["cv"].h is not None

    def test_bayes_cell(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=12)
        records = run_replication(spec, 0, ("bayes_ll",), QUICK_CFG)
        rec = records[0]
        assert rec.failure is None
        assert rec.b > 0 and rec.ise_density > 0

    def test_deterministic_across_runs(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=12)
        a = run_replication(spec, 3, ("rot", "bayes_ll"), QUICK_CFG)
        c = run_replication(spec, 3, ("rot", "bayes_ll"), QUICK_CFG)
        for ra, rc in zip(a, c):
            assert ra.method == rc.method
            if ra.h is not None:
                np.testing.assert_array_equal(ra.h, rc.h)
            assert ra.ise_regression == rc.ise_regression

    def test_replications_differ(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=12)
        a = run_replication(spec, 0, ("rot",), QUICK_CFG)
        c = run_replication(spec, 1, ("rot",), QUICK_CFG)
        assert a[0].ise_regression != c[0].ise_regression


class TestExperiment:
    def test_tidy_rows_and_medians(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=5)
        result = run_experiment(spec, ("rot", "cv"), replications=3,
                                sampler_cfg=QUICK_CFG)
        rows = list(result.tidy_rows())
        assert {r[1] for r in rows} == {"rot", "cv"}
        assert {r[0] for r in rows} == {0, 1, 2}
        med = result.median("rot", "ise_regression")
        vals = result.values("rot", "ise_regression")
        assert med == pytest.approx(float(np.median(vals)))

    def test_parallel_matches_serial(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=5)
        serial = run_experiment(spec, ("rot",), replications=4,
                                sampler_cfg=QUICK_CFG, workers=1)
        parallel = run_experiment(spec, ("rot",), replications=4,
                                  sampler_cfg=QUICK_CFG, workers=2)
        np.testing.assert_array_equal(
            serial.values("rot", "ise_regression"),
            parallel.values("rot", "ise_regression"))

    def test_cell_failure_isolation(self, monkeypatch):
        # Force cv to fail in every replication; rot cells must be intact.
        import bayesbw.simulation as sim

        def broken_cv(*args, **kwargs):
            raise bw.SelectorFailureError("forced failure")

        monkeypatch.setattr(sim, "cv_minimize", broken_cv)
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=5)
        with pytest.raises(bw.BayesbwError):
            run_experiment(spec, ("rot", "cv"), replications=2,
                           sampler_cfg=QUICK_CFG)
        # per-cell isolation is visible through run_replication
        records = run_replication(spec, 0, ("rot", "cv"), QUICK_CFG)
        by_method = {r.method: r for r in records}
        assert by_method["cv"].failure is not None
        assert by_method["rot"].failure is None
        assert by_method["rot"].ise_regression > 0

    def test_unknown_method_rejected(self):
        spec = DGPSpec(design="m1", error="gaussian_half", n=80, seed=5)
        with pytest.raises(ValidationError):
            run_experiment(spec, ("bogus",), replications=1)
