"""Local rational fitting: node initialization, the linearized step, pole
relocation, stability flipping, and the full iteration."""

from __future__ import annotations

import numpy as np
import pytest

from parafit import (
    PoleResidueModel,
    ShapeMismatchError,
    VFConfig,
    eval_pole_residue,
    flip_unstable,
    init_nodes,
    relocate_poles,
    sk_vf_step,
    vf_fit,
)


def _sample(poles, residues, freqs):
    model = PoleResidueModel(poles=np.asarray(poles), residues=np.asarray(residues))
    return np.array([eval_pole_residue(model, s) for s in freqs])


class TestInitNodes:
    def test_order_one_is_real_geometric_mean(self):
        np.testing.assert_allclose(init_nodes(1.0, 100.0, 1), [-10.0], atol=1e-12)

    def test_order_four_band_edges(self):
        nodes = init_nodes(1.0, 1e4, 4)
        expected = np.array([-0.01 + 1j, -0.01 - 1j, -100.0 + 1e4j, -100.0 - 1e4j])
        np.testing.assert_allclose(nodes, expected, rtol=1e-12)

    def test_odd_order_adds_one_real_node(self):
        nodes = init_nodes(1.0, 100.0, 3)
        assert np.sum(nodes.imag == 0.0) == 1
        assert np.sum(nodes.imag != 0.0) == 2

    def test_conjugation_closed(self):
        nodes = init_nodes(0.5, 2e3, 6)
        np.testing.assert_allclose(
            np.sort_complex(nodes), np.sort_complex(np.conj(nodes)), atol=0.0
        )

    def test_bad_band_rejected(self):
        with pytest.raises(ValueError):
            init_nodes(0.0, 1.0, 2)
        with pytest.raises(ValueError):
            init_nodes(2.0, 1.0, 2)


class TestSkVfStep:
    def test_in_class_data_gives_zero_denominator(self):
        poles = np.array([-1.0 + 5.0j, -1.0 - 5.0j, -3.0])
        residues = np.array([0.5 - 0.2j, 0.5 + 0.2j, 2.0])
        freqs = 1j * np.geomspace(0.1, 50.0, 40)
        data = _sample(poles, residues, freqs)
        psi, phi = sk_vf_step(freqs, data, None, poles)
        np.testing.assert_allclose(phi, np.zeros(3), atol=1e-10)
        # psi is aligned with the pole order that was passed in
        np.testing.assert_allclose(psi, residues, atol=1e-9)

    def test_two_sample_hand_oracle(self):
        # 2 samples, 1 node: the linearized system is square, so the step
        # reproduces the exact solve psi - phi h = h (s - node)
        node = np.array([-1.0 + 0.0j])
        freqs = np.array([1j, 2j])
        data = np.array([1.0 / (s + 2.0) for s in freqs])
        rows = np.column_stack([1.0 / (freqs - node[0]), -data / (freqs - node[0])])
        stacked = np.vstack([rows.real, rows.imag])
        rhs = np.concatenate([data.real, data.imag])
        x, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
        psi, phi = sk_vf_step(freqs, data, None, node)
        assert psi[0] == pytest.approx(complex(x[0]), abs=1e-10)
        assert phi[0] == pytest.approx(complex(x[1]), abs=1e-10)

    def test_zero_data(self):
        freqs = 1j * np.array([1.0, 2.0, 3.0])
        psi, phi = sk_vf_step(freqs, np.zeros(3, dtype=np.complex128), None, np.array([-1.0]))
        np.testing.assert_allclose(psi, [0.0], atol=1e-14)
        np.testing.assert_allclose(phi, [0.0], atol=1e-14)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ShapeMismatchError):
            sk_vf_step(np.array([1j, 2j]), np.array([1.0]), None, np.array([-1.0]))


class TestRelocatePoles:
    def test_zero_phi_keeps_nodes(self):
        nodes = np.array([-1.0 + 2.0j, -1.0 - 2.0j, -4.0])
        new = relocate_poles(nodes, np.zeros(3))
        np.testing.assert_allclose(np.sort_complex(new), np.sort_complex(nodes), atol=1e-12)

    def test_single_real_node(self):
        # 1 + 3/(s + 2) vanishes at s = -5
        new = relocate_poles(np.array([-2.0]), np.array([3.0]))
        np.testing.assert_allclose(new, [-5.0], atol=1e-12)

    def test_quadratic_formula_oracle(self):
        lam = np.array([-1.0, -3.0])
        phi = np.array([0.8, -0.4])
        new = relocate_poles(lam, phi)
        # zeros of (s - l1)(s - l2) + phi1 (s - l2) + phi2 (s - l1)
        coeffs = [
            1.0,
            -(lam[0] + lam[1]) + phi[0] + phi[1],
            lam[0] * lam[1] - phi[0] * lam[1] - phi[1] * lam[0],
        ]
        expected = np.roots(coeffs)
        np.testing.assert_allclose(
            np.sort_complex(new), np.sort_complex(expected), atol=1e-10
        )

    def test_realified_mode_keeps_closure(self):
        nodes = np.array([-2.0, -1.0 + 3.0j, -1.0 - 3.0j])
        phi = np.array([0.3, 0.1 + 0.2j, 0.1 - 0.2j])
        new = relocate_poles(nodes, phi, real_symmetric=True)
        np.testing.assert_allclose(
            np.sort_complex(new), np.sort_complex(np.conj(new)), atol=0.0
        )
        free = relocate_poles(nodes, phi, real_symmetric=False)
        np.testing.assert_allclose(
            np.sort_complex(new), np.sort_complex(free), atol=1e-10
        )


class TestFlipUnstable:
    def test_stable_untouched(self):
        np.testing.assert_allclose(flip_unstable([-1.0 + 2.0j]), [-1.0 + 2.0j], atol=0.0)

    def test_unstable_mirrored(self):
        np.testing.assert_allclose(flip_unstable([3.0 - 4.0j]), [-3.0 - 4.0j], atol=0.0)

    def test_axis_nudged_left(self):
        np.testing.assert_allclose(flip_unstable([5.0j]), [-5e-8 + 5.0j], atol=0.0)


class TestVfFit:
    def test_single_pole_recovery(self):
        freqs = 1j * np.array([0.1, 1.0, 10.0])
        data = 1.0 / (freqs + 1.0)
        model = vf_fit(freqs, data, VFConfig(order=1))
        np.testing.assert_allclose(model.poles, [-1.0], atol=1e-10)
        np.testing.assert_allclose(model.residues, [1.0], atol=1e-10)

    def test_two_pole_recovery(self):
        freqs = 1j * np.geomspace(0.01, 100.0, 20)
        data = 1.0 / (freqs + 1.0) + 2.0 / (freqs + 5.0)
        model, info = vf_fit(freqs, data, VFConfig(order=2), full_output=True)
        order = np.argsort(model.poles.real)[::-1]
        np.testing.assert_allclose(model.poles[order], [-1.0, -5.0], atol=1e-8)
        np.testing.assert_allclose(model.residues[order], [1.0, 2.0], atol=1e-8)
        assert info.converged

    def test_in_class_recovery_seeded(self):
        for seed in range(10):
            rng = np.random.default_rng(100 + seed)
            re = -np.exp(rng.uniform(np.log(0.1), np.log(2.0)))
            im = np.exp(rng.uniform(np.log(1.0), np.log(20.0)))
            poles = np.array([re + 1j * im, re - 1j * im, -np.exp(rng.uniform(-1.0, 1.0))])
            res_pair = rng.standard_normal() + 1j * rng.standard_normal()
            residues = np.array([res_pair, np.conj(res_pair), rng.standard_normal()])
            freqs = 1j * np.geomspace(0.05, 100.0, 60)
            data = _sample(poles, residues, freqs)
            model, info = vf_fit(freqs, data, VFConfig(order=3), full_output=True)
            fit = _sample(model.poles, model.residues, freqs)
            rel = np.linalg.norm(fit - data) / np.linalg.norm(data)
            assert rel <= 1e-8, f"seed {seed}: rel {rel:.3e}"
            assert info.converged

    def test_final_residual_not_worse_than_first(self):
        rng = np.random.default_rng(7)
        freqs = 1j * np.geomspace(0.1, 10.0, 30)
        # out-of-class data: rational plus a slowly varying perturbation
        data = 1.0 / (freqs + 1.0) + 0.05 * rng.standard_normal(30)
        _, info = vf_fit(freqs, data, VFConfig(order=2), full_output=True)
        assert info.final_residual <= info.sk_residuals[0] + 1e-12

    def test_returned_poles_stable(self):
        rng = np.random.default_rng(8)
        freqs = 1j * np.geomspace(0.1, 10.0, 25)
        data = rng.standard_normal(25) + 1j * rng.standard_normal(25)
        model = vf_fit(freqs, data, VFConfig(order=4))
        assert model.is_stable()

    def test_real_symmetric_closure(self):
        freqs = 1j * np.geomspace(0.1, 50.0, 40)
        data = _sample([-1.0 + 3.0j, -1.0 - 3.0j], [0.5 - 1.0j, 0.5 + 1.0j], freqs)
        model, info = vf_fit(freqs, data, VFConfig(order=2), full_output=True)
        assert info.real_symmetric
        assert model.real_flag
        np.testing.assert_allclose(
            np.sort_complex(model.poles), np.sort_complex(np.conj(model.poles)), atol=0.0
        )

    def test_warns_when_underdetermined(self):
        freqs = 1j * np.array([1.0, 2.0, 3.0])
        data = 1.0 / (freqs + 1.0)
        with pytest.warns(UserWarning, match="samples"):
            vf_fit(freqs, data, VFConfig(order=2))

    def test_weighted_fit_matches_unweighted_for_uniform_weights(self):
        freqs = 1j * np.geomspace(0.1, 10.0, 30)
        data = 1.0 / (freqs + 1.0) + 2.0 / (freqs + 5.0)
        plain = vf_fit(freqs, data, VFConfig(order=2))
        weighted = vf_fit(freqs, data, VFConfig(order=2, freq_weights=np.ones(30)))
        np.testing.assert_allclose(
            np.sort_complex(plain.poles), np.sort_complex(weighted.poles), atol=1e-10
        )

    def test_config_validation(self):
        with pytest.raises(ValueError):
            VFConfig(order=0)
        with pytest.raises(ValueError):
            VFConfig(order=1, max_iters=0)
