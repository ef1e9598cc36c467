import json

import numpy as np
import pytest

from npdt import (
    DomainError,
    FellerMatrix,
    GridSpec,
    InputError,
    KernelSpec,
    Measure,
    ModelSpec,
    build_counterexample,
    build_nonlocal_diffusion,
    inner_product,
    model_from_dict,
    model_to_dict,
    validate_model,
)


def unit_measure(n):
    return Measure.uniform(n)


class TestMeasure:
    def test_total_matches_sum(self):
        m = Measure.from_weights([0.5, 0.25])
        assert m.total == 0.75

    def test_rejects_nonpositive_weights(self):
        with pytest.raises(DomainError):
            Measure.from_weights([1.0, 0.0])

    def test_rejects_inconsistent_total(self):
        with pytest.raises(DomainError):
            Measure(weights=np.array([1.0, 1.0]), total=3.0)


class TestInnerProduct:
    def test_constant_case(self):
        m = unit_measure(2)
        assert inner_product([1.0, 1.0], [1.0, 1.0], m) == pytest.approx(2.0)

    def test_orthogonality(self):
        m = unit_measure(2)
        assert inner_product([1.0, -1.0], [1.0, 1.0], m) == pytest.approx(0.0)

    def test_weighted_sum(self):
        m = Measure.from_weights([0.5, 0.25])
        # 0.5*2*1 + 0.25*3*4
        assert inner_product([2.0, 3.0], [1.0, 4.0], m) == pytest.approx(4.0)

    def test_symmetric_bilinear(self):
        rng = np.random.default_rng(7)
        for _ in range(50):
            n = int(rng.integers(1, 8))
            m = Measure.from_weights(rng.uniform(0.2, 2.0, n))
            u, v, z = rng.standard_normal((3, n))
            a, b = rng.standard_normal(2)
            assert inner_product(u, v, m) == pytest.approx(inner_product(v, u, m), abs=1e-14)
            lhs = inner_product(a * u + b * z, v, m)
            rhs = a * inner_product(u, v, m) + b * inner_product(z, v, m)
            assert lhs == pytest.approx(rhs, abs=1e-12, rel=1e-13)


CIRCULANT = np.array([[-1.0, 1.0, 0.0], [0.0, -1.0, 1.0], [1.0, 0.0, -1.0]])


class TestValidateModel:
    def test_circulant_passes(self):
        spec = ModelSpec(
            n=3,
            generator=FellerMatrix(CIRCULANT, unit_measure(3)),
            r=np.ones(3),
            b=np.ones(3),
            c=np.ones(3),
            p=1.0,
        )
        report = validate_model(spec)
        assert report.passed

    def test_scalar_zero_generator(self):
        spec = ModelSpec(
            n=1,
            generator=FellerMatrix(np.zeros((1, 1)), unit_measure(1)),
            r=np.array([1.0]),
            b=np.array([1.0]),
            c=np.array([1.0]),
            p=1.0,
        )
        report = validate_model(spec)
        assert report.zero_row_sum and report.irreducible

    def test_reducible_block(self):
        M = np.array([[-1.0, 1.0], [0.0, 0.0]])
        spec = ModelSpec(
            n=2,
            generator=FellerMatrix(M, unit_measure(2)),
            r=np.ones(2),
            b=np.ones(2),
            c=np.ones(2),
            p=1.0,
        )
        report = validate_model(spec)
        assert not report.irreducible
        assert not report.passed


class TestNonlocalDiffusion:
    def test_uniform_kernel_two_nodes(self):
        gen = build_nonlocal_diffusion(GridSpec(0.0, 1.0, 2), KernelSpec(kind="uniform"))
        assert np.allclose(gen.entries, [[-0.5, 0.5], [0.5, -0.5]], atol=1e-15)
        assert np.allclose(gen.measure.weights, [0.5, 0.5])

    def test_row_sums_vanish(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            n = int(rng.integers(2, 40))
            ker = KernelSpec(kind="gaussian", params={"length": float(rng.uniform(0.1, 1.0))})
            gen = build_nonlocal_diffusion(GridSpec(-1.0, 2.0, n), ker)
            assert np.abs(gen.entries.sum(axis=1)).max() <= 1e-14

    def test_symmetric_table_self_adjoint(self):
        rng = np.random.default_rng(5)
        n = 7
        T = rng.uniform(0.0, 2.0, (n, n))
        T = 0.5 * (T + T.T)
        gen = build_nonlocal_diffusion(
            GridSpec(0.0, 3.0, n), KernelSpec(kind="custom-table", table=T)
        )
        w = gen.measure.weights
        lhs = gen.entries * w[:, None]
        assert np.allclose(lhs, lhs.T, atol=1e-14)

    def test_negative_kernel_rejected(self):
        T = -np.ones((2, 2))
        with pytest.raises(DomainError):
            build_nonlocal_diffusion(
                GridSpec(0.0, 1.0, 2), KernelSpec(kind="custom-table", table=T)
            )

    def test_feller_invariant_scale(self):
        gen = build_nonlocal_diffusion(
            GridSpec(0.0, 1.0, 25), KernelSpec(kind="gaussian", params={"length": 0.3})
        )
        rowsum = np.abs(gen.entries.sum(axis=1)).max()
        assert rowsum <= 1e-10 * max(np.abs(gen.entries).max(), 1.0)


class TestCounterexamples:
    def test_one_competition_mass(self):
        spec = build_counterexample("one")
        assert float(spec.c.sum()) == pytest.approx(1.0, abs=1e-15)
        assert validate_model(spec).passed

    def test_two_growth_rates(self):
        spec = build_counterexample("two")
        # published to three significant digits
        assert spec.r[0] == pytest.approx(0.0102, rel=5e-3)
        assert spec.r[1] == pytest.approx(0.0201, rel=5e-3)
        assert spec.r[2] == pytest.approx(10002.0, rel=5e-4)
        assert validate_model(spec).passed

    def test_two_scaled_competition_weight(self):
        spec = build_counterexample("two")
        u_star = 1000.0 * np.array([1.0, 100.0, 10000.0])
        assert np.allclose(u_star * spec.c, 1000.0 * np.array([1.0, 1e-4, 1e-4]), rtol=1e-12)

    def test_angle_sine_valid(self):
        spec = build_counterexample("angle_sine", eps=1e-3, n=32)
        assert validate_model(spec).passed
        assert spec.grid_origin

    def test_unknown_case(self):
        with pytest.raises(InputError):
            build_counterexample("three")


class TestModelJson:
    def _dict(self):
        return {
            "n": 2,
            "M": [-1.0, 1.0, 1.0, -1.0],
            "r": [1.0, 2.0],
            "b": [1.0, 1.0],
            "c": [0.5, 0.5],
            "p": 1.0,
            "name": "pair",
        }

    def test_round_trip(self):
        spec = model_from_dict(self._dict())
        again = model_from_dict(json.loads(json.dumps(model_to_dict(spec))))
        assert np.allclose(again.M, spec.M)
        assert again.name == "pair"
        assert np.allclose(again.measure.weights, [1.0, 1.0])

    def test_unknown_field_rejected(self):
        bad = self._dict()
        bad["extra"] = 1
        with pytest.raises(InputError):
            model_from_dict(bad)

    def test_missing_field_rejected(self):
        bad = self._dict()
        del bad["r"]
        with pytest.raises(InputError):
            model_from_dict(bad)

    def test_weights_default_to_ones(self):
        spec = model_from_dict(self._dict())
        assert spec.measure.total == pytest.approx(2.0)

    def test_nonpositive_coefficient_rejected(self):
        bad = self._dict()
        bad["b"] = [1.0, -1.0]
        with pytest.raises(InputError):
            model_from_dict(bad)


class TestGridKernelSpecs:
    def test_grid_validation(self):
        with pytest.raises(DomainError):
            GridSpec(1.0, 0.0, 4)
        with pytest.raises(DomainError):
            GridSpec(0.0, 1.0, 1)

    def test_kernel_kind_validation(self):
        with pytest.raises(DomainError):
            KernelSpec(kind="bogus")

    def test_exponent_domain(self):
        with pytest.raises(DomainError):
            ModelSpec(
                n=1,
                generator=FellerMatrix(np.zeros((1, 1)), unit_measure(1)),
                r=np.array([1.0]),
                b=np.array([1.0]),
                c=np.array([1.0]),
                p=0.5,
            )
