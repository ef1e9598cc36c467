import numpy as np
import pytest

from npdt import (
    FellerMatrix,
    Measure,
    ReducedModel,
    build_counterexample,
    inner_product,
    reduce_model,
    reduced_spec,
    solve_stationary,
    stationarity_residual,
    verify_reduced,
)
from _factories import random_model, reduced_form_model, random_symmetric_feller_entries


PUBLISHED_M_TILDE = np.array(
    [[-1.0, 1.0, 0.0], [0.0001, -1.0001, 1.0], [0.0, 0.0001, -0.0001]]
)


def reduce_of(spec):
    st = solve_stationary(spec)
    return reduce_model(spec, st), st


class TestReduce:
    def test_constant_equilibrium_keeps_generator(self):
        rng = np.random.default_rng(0)
        m = Measure.from_weights(rng.uniform(0.5, 2.0, 5))
        M = random_symmetric_feller_entries(5, rng)
        c = rng.uniform(0.3, 2.0, 5)
        spec = reduced_form_model(M, rng.uniform(0.5, 2.0, 5), c, 1.0, m)
        red, _ = reduce_of(spec)
        assert np.allclose(red.M, M, atol=1e-10)
        assert np.allclose(
            red.c_tilde, c / float(inner_product(c, np.ones(5), m)), rtol=1e-10
        )

    def test_instability_two_published_matrix(self):
        red, _ = reduce_of(build_counterexample("two"))
        assert np.abs(red.M - PUBLISHED_M_TILDE).max() <= 1e-4

    def test_invariants_always_hold(self):
        rng = np.random.default_rng(1)
        for _ in range(20):
            spec = random_model(int(rng.integers(2, 7)), rng, p=float(rng.choice([1.0, 2.0])))
            red, _ = reduce_of(spec)
            assert np.abs(red.M.sum(axis=1)).max() <= 1e-10 * max(np.abs(red.M).max(), 1.0)
            mass = inner_product(np.ones(red.n), red.c_tilde, red.measure)
            assert mass == pytest.approx(1.0, abs=1e-12)

    def test_rank_one_term_preserved(self):
        # b~ (x) c~ must equal b (x) (u*^p c): the coupling factor cancels
        rng = np.random.default_rng(2)
        spec = random_model(4, rng, p=2.0)
        red, st = reduce_of(spec)
        w = spec.measure.weights
        lhs = np.outer(red.b_tilde, red.c_tilde * w)
        rhs = np.outer(spec.b, st.u_star**2 * spec.c * w)
        assert np.allclose(lhs, rhs, rtol=1e-10)


class TestVerifyReduced:
    def test_instability_one_passes_normal(self):
        red, _ = reduce_of(build_counterexample("one"))
        report = verify_reduced(red)
        assert report.passed
        from npdt import normality_defect

        assert normality_defect(-red.M, red.measure) <= 1e-12

    def test_instability_two_passes_not_normal(self):
        red, _ = reduce_of(build_counterexample("two"))
        report = verify_reduced(red)
        assert report.passed
        from npdt import normality_defect

        assert normality_defect(-red.M, red.measure) > 1e-3

    def test_corrupted_row_sum_fails(self):
        red, _ = reduce_of(build_counterexample("one"))
        bad = red.M.copy()
        bad[0, 0] += 0.5
        corrupted = ReducedModel(
            m_tilde=FellerMatrix(bad, red.measure),
            b_tilde=red.b_tilde,
            c_tilde=red.c_tilde,
            measure=red.measure,
            p=red.p,
        )
        report = verify_reduced(corrupted)
        assert not report.zero_row_sum
        assert not report.passed


class TestReducedEquilibrium:
    def test_equilibrium_transport(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            spec = random_model(int(rng.integers(2, 6)), rng, p=float(rng.choice([1.0, 2.0])))
            red, _ = reduce_of(spec)
            rspec = reduced_spec(red)
            assert stationarity_residual(rspec, np.ones(red.n)) <= 1e-8

    def test_double_reduction_idempotent(self):
        rng = np.random.default_rng(4)
        for _ in range(10):
            spec = random_model(int(rng.integers(2, 6)), rng, p=float(rng.choice([1.0, 2.0])))
            red, _ = reduce_of(spec)
            rspec = reduced_spec(red)
            red2, _ = reduce_of(rspec)
            assert np.abs(red2.M - red.M).max() <= 1e-12 * max(np.abs(red.M).max(), 1.0)
            assert np.abs(red2.b_tilde - red.b_tilde).max() <= 1e-12 * np.abs(red.b_tilde).max()
            assert np.abs(red2.c_tilde - red.c_tilde).max() <= 1e-12 * np.abs(red.c_tilde).max()
