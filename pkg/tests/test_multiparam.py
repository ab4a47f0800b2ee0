"""Two-parameter extension: q-major flattening, the Kronecker-basis coupled
solve, tensor evaluation, and the product-basis compression path."""

from __future__ import annotations

import numpy as np
import pytest

from parafit import (
    FrequencyResponseDataset,
    FrequencyResponseDataset2,
    IRKAConfig,
    NonFiniteError,
    OutOfRangeError,
    ParametricBasis,
    ParametricModel2,
    Phase1Config,
    PoleResidueModel,
    ProblemTooLargeError,
    ShapeMismatchError,
    TwoParamConfig,
    VFConfig,
    compress_two_param,
    eval_two_param,
    eval_two_param_grid,
    fit_fixed_basis,
    fit_two_param,
    flatten_index,
    pole_residue_matrix,
)
from parafit.linalg import pinv


class TestFlattenIndex:
    def test_corner(self):
        assert flatten_index(1, 1, 7) == 1

    def test_q_varies_fastest(self):
        assert flatten_index(2, 1, 3) == 4

    def test_formula(self):
        assert flatten_index(3, 2, 5) == 12

    def test_out_of_range(self):
        with pytest.raises(OutOfRangeError):
            flatten_index(0, 1, 3)
        with pytest.raises(OutOfRangeError):
            flatten_index(1, 0, 3)
        with pytest.raises(OutOfRangeError):
            flatten_index(1, 4, 3)
        with pytest.raises(OutOfRangeError):
            flatten_index(1, 1, 0)

    def test_matches_c_order_reshape(self):
        # placing each tube at its flattened column reproduces the row-major
        # reshape, so the q index really varies fastest
        rng = np.random.default_rng(71)
        m_s, m_p, m_q = 4, 3, 5
        tensor = rng.standard_normal((m_s, m_p, m_q))
        flat = np.empty((m_s, m_p * m_q))
        for j1 in range(1, m_p + 1):
            for j2 in range(1, m_q + 1):
                flat[:, flatten_index(j1, j2, m_q) - 1] = tensor[:, j1 - 1, j2 - 1]
        np.testing.assert_array_equal(flat, tensor.reshape(m_s, m_p * m_q))


def _separable_setup(seed=70):
    rng = np.random.default_rng(seed)
    locals_ = (
        PoleResidueModel(poles=np.array([-1.0, -3.0]), residues=np.array([1.0, 0.5])),
        PoleResidueModel(poles=np.array([-2.0]), residues=np.array([-0.8])),
    )
    basis_p = ParametricBasis.bernstein(1, (0.0, 1.0))
    basis_q = ParametricBasis.bernstein(1, (0.0, 1.0))
    x = rng.standard_normal((2, 4)) + 1j * rng.standard_normal((2, 4))
    true = ParametricModel2(
        local_models=locals_, basis_p=basis_p, basis_q=basis_q, coefficients=x
    )
    freqs = 1j * np.geomspace(0.1, 10.0, 25)
    pgrid = np.linspace(0.0, 1.0, 3)
    qgrid = np.linspace(0.0, 1.0, 3)
    samples = eval_two_param_grid(true, freqs, pgrid, qgrid)
    dataset = FrequencyResponseDataset2(
        frequencies=freqs, parameters_p=pgrid, parameters_q=qgrid, samples=samples
    )
    return dataset, true


class TestDataset2:
    def test_shape_mismatch(self):
        with pytest.raises(ShapeMismatchError):
            FrequencyResponseDataset2(
                frequencies=1j * np.array([1.0, 2.0]),
                parameters_p=np.array([0.0, 1.0]),
                parameters_q=np.array([0.5]),
                samples=np.zeros((2, 3)),
            )

    def test_duplicate_grid_values(self):
        with pytest.raises(ValueError):
            FrequencyResponseDataset2(
                frequencies=1j * np.array([1.0, 2.0]),
                parameters_p=np.array([0.0, 0.0]),
                parameters_q=np.array([0.5]),
                samples=np.zeros((2, 2)),
            )

    def test_negative_weights(self):
        with pytest.raises(NonFiniteError):
            FrequencyResponseDataset2(
                frequencies=1j * np.array([1.0, 2.0]),
                parameters_p=np.array([0.0, 1.0]),
                parameters_q=np.array([0.5]),
                samples=np.zeros((2, 2)),
                weights=-np.ones((2, 2)),
            )


class TestModel2Validation:
    def test_coefficient_shape(self):
        local = PoleResidueModel(poles=np.array([-1.0]), residues=np.array([1.0]))
        with pytest.raises(ShapeMismatchError):
            ParametricModel2(
                local_models=(local,),
                basis_p=ParametricBasis.bernstein(1, (0.0, 1.0)),
                basis_q=ParametricBasis.bernstein(1, (0.0, 1.0)),
                coefficients=np.zeros((1, 3)),
            )

    def test_empty_locals(self):
        with pytest.raises(ValueError):
            ParametricModel2(
                local_models=(),
                basis_p=ParametricBasis.monomial(0, (0.0, 1.0)),
                basis_q=ParametricBasis.monomial(0, (0.0, 1.0)),
                coefficients=np.zeros((0, 1)),
            )


class TestEvalTwoParam:
    def test_zero_coefficients(self):
        _, true = _separable_setup()
        model = ParametricModel2(
            local_models=true.local_models,
            basis_p=true.basis_p,
            basis_q=true.basis_q,
            coefficients=np.zeros_like(true.coefficients),
        )
        assert eval_two_param(model, 1j, 0.3, 0.7) == 0.0

    def test_single_coefficient_is_triple_product(self):
        _, true = _separable_setup()
        r_q = true.basis_q.size
        coeff = np.zeros_like(true.coefficients)
        k, l1, l2 = 1, 0, 1
        coeff[k, l1 * r_q + l2] = 1.0
        model = ParametricModel2(
            local_models=true.local_models,
            basis_p=true.basis_p,
            basis_q=true.basis_q,
            coefficients=coeff,
        )
        s, p, q = 0.5j, 0.2, 0.8
        from parafit import eval_basis

        expected = (
            true.local_models[k].eval(s)
            * eval_basis(true.basis_p, p)[l1]
            * eval_basis(true.basis_q, q)[l2]
        )
        assert eval_two_param(model, s, p, q) == pytest.approx(expected, rel=1e-14)

    def test_matches_triple_loop(self):
        from parafit import eval_basis

        _, true = _separable_setup(72)
        rng = np.random.default_rng(73)
        r_q = true.basis_q.size
        for _ in range(10):
            s = 1j * np.exp(rng.uniform(-1.0, 2.0))
            p, q = rng.uniform(0.0, 1.0, 2)
            total = 0.0 + 0.0j
            vp = eval_basis(true.basis_p, p)
            vq = eval_basis(true.basis_q, q)
            for k, local in enumerate(true.local_models):
                for l1 in range(true.basis_p.size):
                    for l2 in range(r_q):
                        total += true.coefficients[k, l1 * r_q + l2] * local.eval(s) * vp[l1] * vq[l2]
            got = eval_two_param(true, s, p, q)
            assert abs(got - total) <= 1e-14 * max(1.0, abs(total))

    def test_grid_matches_pointwise(self):
        _, true = _separable_setup(74)
        freqs = 1j * np.array([0.3, 2.0])
        pgrid = np.array([0.1, 0.6])
        qgrid = np.array([0.2, 0.5, 0.9])
        grid = eval_two_param_grid(true, freqs, pgrid, qgrid)
        for i, s in enumerate(freqs):
            for j1 in range(2):
                for j2 in range(3):
                    col = flatten_index(j1 + 1, j2 + 1, 3) - 1
                    assert grid[i, col] == pytest.approx(
                        eval_two_param(true, s, pgrid[j1], qgrid[j2]), rel=1e-13
                    )


class TestKroneckerPinv:
    def test_factored_identity(self):
        rng = np.random.default_rng(75)
        b_p = rng.standard_normal((5, 3))
        b_q = rng.standard_normal((4, 2))
        full = pinv(np.kron(b_p, b_q))
        factored = np.kron(pinv(b_p), pinv(b_q))
        assert np.linalg.norm(full - factored) <= 1e-10 * np.linalg.norm(full)


class TestFitTwoParam:
    def test_separable_in_class_recovery(self):
        dataset, _ = _separable_setup()
        config = TwoParamConfig(
            basis_p=ParametricBasis.bernstein(1, (0.0, 1.0)),
            basis_q=ParametricBasis.bernstein(1, (0.0, 1.0)),
            vf=VFConfig(order=3),
        )
        model, info = fit_two_param(dataset, config, full_output=True)
        assert info["residual"] <= 1e-8
        assert len(model.local_models) == 9

    def test_constant_bases_fit_column_mean(self):
        # every column lies in the span of the local models, so with both
        # bases constant the best single response is the column mean
        g = PoleResidueModel(poles=np.array([-1.0, -4.0]), residues=np.array([1.0, -0.5]))
        freqs = 1j * np.geomspace(0.1, 20.0, 30)
        gvals = np.array([g.eval(s) for s in freqs])
        gammas = np.array([0.5, 1.0, 1.5, 2.0])
        samples = gvals[:, None] * gammas[None, :]
        dataset = FrequencyResponseDataset2(
            frequencies=freqs,
            parameters_p=np.array([0.0, 1.0]),
            parameters_q=np.array([0.0, 1.0]),
            samples=samples,
        )
        config = TwoParamConfig(
            basis_p=ParametricBasis.monomial(0, (0.0, 1.0)),
            basis_q=ParametricBasis.monomial(0, (0.0, 1.0)),
            vf=VFConfig(order=2),
        )
        model = fit_two_param(dataset, config)
        a_block = pole_residue_matrix(model.local_models, freqs)
        fitted = a_block @ model.coefficients[:, 0]
        np.testing.assert_allclose(fitted, samples.mean(axis=1), atol=1e-8)
        # scalar normal equations on the stacked design give the same column
        design = np.kron(np.ones((4, 1)), a_block)
        x_ref, *_ = np.linalg.lstsq(design, samples.flatten(order="F"), rcond=None)
        fitted_ref = a_block @ x_ref
        np.testing.assert_allclose(fitted, fitted_ref, atol=1e-8)

    def test_matches_single_parameter_path(self):
        # m_q = 1 with a constant q basis degenerates to the fixed-basis fit
        dataset1, _, x_true = _in_class_single_param()
        m_q1 = FrequencyResponseDataset2(
            frequencies=dataset1.frequencies,
            parameters_p=dataset1.parameters,
            parameters_q=np.array([0.5]),
            samples=dataset1.samples,
        )
        basis_p = ParametricBasis.bernstein(1, (0.0, 1.0))
        vf = VFConfig(order=3)
        model2 = fit_two_param(
            m_q1,
            TwoParamConfig(
                basis_p=basis_p,
                basis_q=ParametricBasis.monomial(0, (0.0, 1.0)),
                vf=vf,
            ),
        )
        model1 = fit_fixed_basis(dataset1, Phase1Config(basis=basis_p, vf=vf))
        np.testing.assert_allclose(
            model2.coefficients, model1.coefficients, atol=1e-10
        )
        for s in (0.4j, 3.0j):
            for p in (0.25, 0.75):
                assert eval_two_param(model2, s, p, 0.5) == pytest.approx(
                    model1.eval(s, p), abs=1e-10
                )

    def test_decimation_subsamples_local_models(self):
        dataset, _ = _separable_setup(76)
        config = TwoParamConfig(
            basis_p=ParametricBasis.bernstein(1, (0.0, 1.0)),
            basis_q=ParametricBasis.bernstein(1, (0.0, 1.0)),
            vf=VFConfig(order=3),
            decimation=2,
        )
        model = fit_two_param(dataset, config)
        assert len(model.local_models) == 5

    def test_local_order_count_mismatch(self):
        dataset, _ = _separable_setup(77)
        config = TwoParamConfig(
            basis_p=ParametricBasis.bernstein(1, (0.0, 1.0)),
            basis_q=ParametricBasis.bernstein(1, (0.0, 1.0)),
            vf=VFConfig(order=3),
            local_orders=(3, 3),
        )
        with pytest.raises(ShapeMismatchError):
            fit_two_param(dataset, config)

    def test_state_explosion_guard(self):
        freqs = 1j * np.array([1.0, 2.0])
        pgrid = np.arange(40, dtype=float)
        qgrid = np.arange(40.0, 70.0)
        dataset = FrequencyResponseDataset2(
            frequencies=freqs,
            parameters_p=pgrid,
            parameters_q=qgrid,
            samples=np.ones((2, 1200), dtype=complex),
        )
        config = TwoParamConfig(
            basis_p=ParametricBasis.monomial(1, (0.0, 40.0)),
            basis_q=ParametricBasis.monomial(1, (40.0, 70.0)),
            vf=VFConfig(order=5),
        )
        with pytest.raises(ProblemTooLargeError):
            fit_two_param(dataset, config)

    def test_weights_ignored_warning(self):
        dataset, _ = _separable_setup(78)
        weighted = FrequencyResponseDataset2(
            frequencies=dataset.frequencies,
            parameters_p=dataset.parameters_p,
            parameters_q=dataset.parameters_q,
            samples=dataset.samples,
            weights=np.ones(dataset.samples.shape),
        )
        config = TwoParamConfig(
            basis_p=ParametricBasis.bernstein(1, (0.0, 1.0)),
            basis_q=ParametricBasis.bernstein(1, (0.0, 1.0)),
            vf=VFConfig(order=3),
        )
        with pytest.warns(UserWarning, match="ignores dataset weights"):
            fit_two_param(weighted, config)

    def test_decimation_validation(self):
        with pytest.raises(ValueError):
            TwoParamConfig(
                basis_p=ParametricBasis.monomial(0, (0.0, 1.0)),
                basis_q=ParametricBasis.monomial(0, (0.0, 1.0)),
                vf=VFConfig(order=2),
                decimation=0,
            )


def _in_class_single_param():
    rng = np.random.default_rng(79)
    locals_ = (
        PoleResidueModel(poles=np.array([-1.0, -3.0]), residues=np.array([1.0, 0.5])),
        PoleResidueModel(poles=np.array([-2.0]), residues=np.array([-0.8])),
    )
    basis = ParametricBasis.bernstein(1, (0.0, 1.0))
    x = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    freqs = 1j * np.geomspace(0.1, 10.0, 25)
    params = np.linspace(0.0, 1.0, 4)
    from parafit import ParametricModel, eval_parametric_grid

    true = ParametricModel(local_models=locals_, basis=basis, coefficients=x)
    samples = eval_parametric_grid(true, freqs, params)
    dataset = FrequencyResponseDataset(
        frequencies=freqs, parameters=params, samples=samples
    )
    return dataset, true, x


class TestCompressTwoParam:
    def test_full_order_matches_evaluations(self):
        _, true = _separable_setup(80)
        reduced, info = compress_two_param(true, IRKAConfig(n_red=3), full_output=True)
        assert "joint_error" in info
        rng = np.random.default_rng(81)
        for _ in range(10):
            s = 1j * np.exp(rng.uniform(-1.0, 2.0))
            p, q = rng.uniform(0.0, 1.0, 2)
            full = eval_two_param(true, s, p, q)
            red = reduced.eval(s, p, q)
            assert abs(full - red) <= 1e-8 * max(1.0, abs(full))

    def test_reduced_is_stable(self):
        _, true = _separable_setup(82)
        reduced = compress_two_param(true, IRKAConfig(n_red=2))
        assert np.all(np.linalg.eigvals(reduced.a_red).real < 0.0)
