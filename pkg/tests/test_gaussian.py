import unittest
import math

import numpy as np

from pycovert.gaussian import GaussianState, ScenarioParams, ChernoffPair, symplectic_form, symplectic_eigenvalues, \
    williamson_decomposition, thermal_state, coherent_state, tmsv_state, thermal_loss_channel, alice_received, \
    q_s_gaussian, chernoff_exponent_per_mode


def thermal_q_s(n0, n1, s):
    # Tr ρ₀^s ρ₁^(1−s) for two single-mode thermal states.
    return 1 / ((n0 + 1) ** s * (n1 + 1) ** (1 - s) - n0 ** s * n1 ** (1 - s))


def product_state(state, copies):
    # state^⊗copies in quadrature order q₁..q_n, p₁..p_n of all modes.
    n_modes = state.n_modes
    total_modes = n_modes * copies
    mean = np.zeros(2 * total_modes)
    covariance = np.zeros((2 * total_modes, 2 * total_modes))

    for copy in range(copies):
        indices = [copy * n_modes + mode for mode in range(n_modes)]
        indices += [total_modes + index for index in indices]
        mean[indices] = state.mean
        covariance[np.ix_(indices, indices)] = state.covariance

    return GaussianState(mean, covariance)


class TestGaussianMethods(unittest.TestCase):
    """
    Test the Gaussian states, the channels and the symplectic Chernoff formula.
    """

    def test_symplectic_eigenvalues(self):
        """
        Test the symplectic spectrum of a thermal state and of the pure TMSV state.
        """

        assert np.allclose(symplectic_eigenvalues(thermal_state(0.3, 2).covariance), [0.8, 0.8])
        assert np.allclose(tmsv_state(0.7).symplectic_spectrum(), [0.5, 0.5], atol=1e-9)

    def test_williamson_decomposition(self):
        """
        Test the reconstruction V = S·diag(ν, ν)·Sᵀ with a symplectic S for a mixed two-mode state.
        """

        state = thermal_loss_channel(tmsv_state(0.4), 0, 0.3, 0.5)
        values, symplectic_matrix = williamson_decomposition(state.covariance)
        normal_form = np.diag(np.concatenate([values, values]))

        assert np.allclose(symplectic_matrix @ normal_form @ symplectic_matrix.T, state.covariance, atol=1e-10)
        assert np.allclose(symplectic_matrix @ symplectic_form(2) @ symplectic_matrix.T, symplectic_form(2),
                           atol=1e-10)
        assert np.allclose(np.sort(values), symplectic_eigenvalues(state.covariance), atol=1e-10)

        with self.assertRaises(ValueError):
            williamson_decomposition(-np.eye(2))

    def test_invalid_gaussian_state(self):
        """
        Test the rejection of covariance matrices violating the uncertainty principle or the shape conditions.
        """

        with self.assertRaises(ValueError):
            GaussianState([0, 0], 0.2 * np.eye(2))

        with self.assertRaises(ValueError):
            GaussianState([0, 0, 0], np.eye(2))

        with self.assertRaises(ValueError):
            GaussianState([0, 0], [[1.0, 0.3], [0.0, 1.0]])

    def test_mean_photon_numbers(self):
        """
        Test the mean photon numbers of coherent, thermal and TMSV states.
        """

        assert abs(coherent_state(0.6 + 0.8j).mean_photon_number() - 1.0) < 1e-12
        assert abs(thermal_state(0.25).mean_photon_number() - 0.25) < 1e-12
        assert abs(tmsv_state(0.2).mean_photon_number(1) - 0.2) < 1e-12

    def test_thermal_loss_channel(self):
        """
        Test the thermal loss channel: transmittance 0 gives the environment state, a thermal input with the
        environment brightness is a fixed point.
        """

        replaced = thermal_loss_channel(coherent_state(2.0), 0, 0.0, 0.3)
        assert np.allclose(replaced.covariance, thermal_state(0.3).covariance)
        assert np.allclose(replaced.mean, 0)

        fixed_point = thermal_loss_channel(thermal_state(0.7), 0, 0.4, 0.7)
        assert np.allclose(fixed_point.covariance, thermal_state(0.7).covariance)

        with self.assertRaises(ValueError):
            thermal_loss_channel(thermal_state(0.1), 0, 1.5, 0.1)

    def test_alice_received(self):
        """
        Test the states Alice holds under both hypotheses for a TMSV probe.
        """

        scenario = ScenarioParams(0.1, 0.2)
        rho0 = alice_received(tmsv_state(0.2), 0, scenario)
        rho1 = alice_received(tmsv_state(0.2), 1, scenario)

        assert abs(rho0.mean_photon_number(0) - 0.2) < 1e-12
        # Under hypothesis 1, the return has energy ηN_S + (1−η)N_B.
        assert abs(rho1.mean_photon_number(0) - (0.1 * 0.2 + 0.9 * 0.2)) < 1e-12
        # The signal-idler correlation is gone without a target.
        assert abs(rho0.covariance[0, 1]) < 1e-15

        with self.assertRaises(ValueError):
            alice_received(thermal_state(0.1, 3), 0, scenario)

        with self.assertRaises(ValueError):
            alice_received(tmsv_state(0.2), 2, scenario)

    def test_q_s_thermal_closed_form(self):
        """
        Test Q_s between thermal states against the closed form of the geometric sums.
        """

        for s in (0.1, 0.5, 0.9):
            assert abs(q_s_gaussian(thermal_state(0.3), thermal_state(1.2), s) - thermal_q_s(0.3, 1.2, s)) < 1e-10

    def test_q_s_coherent_overlap(self):
        """
        Test Q_s between pure coherent states, which is the squared overlap exp(−|α−β|²) for every s.
        """

        for s in (0.2, 0.5, 0.8):
            q_s = q_s_gaussian(coherent_state(0.5), coherent_state(-0.3 + 0.4j), s)
            assert abs(q_s - math.exp(-(0.8 ** 2 + 0.4 ** 2))) < 1e-10

    def test_q_s_identities(self):
        """
        Test Q_s = 1 for identical states and the exchange symmetry Q_s(ρ₀, ρ₁) = Q_(1−s)(ρ₁, ρ₀).
        """

        scenario = ScenarioParams(0.05, 0.4)
        rho0 = alice_received(tmsv_state(0.3), 0, scenario)
        rho1 = alice_received(tmsv_state(0.3), 1, scenario)

        assert abs(q_s_gaussian(rho1, rho1, 0.4) - 1.0) < 1e-10

        for s in (0.1, 0.3, 0.5, 0.7, 0.9):
            assert abs(q_s_gaussian(rho0, rho1, s) - q_s_gaussian(rho1, rho0, 1 - s)) < 1e-10

    def test_q_s_multiplicative_over_modes(self):
        """
        Test Q_s(ρ₀^⊗M, ρ₁^⊗M) = Q_s(ρ₀, ρ₁)^M for the covert TMSV pair and for a thermal against a displaced thermal
        state.
        """

        scenario = ScenarioParams(0.05, 0.4)
        tmsv_pair = [alice_received(tmsv_state(0.3), hypothesis, scenario) for hypothesis in (0, 1)]
        displaced = thermal_loss_channel(coherent_state(0.6 - 0.2j), 0, 0.05, 0.4)
        coherent_pair = [thermal_state(0.4), displaced]

        for rho0, rho1 in (tmsv_pair, coherent_pair):
            for copies in (2, 3):
                product0 = product_state(rho0, copies)
                product1 = product_state(rho1, copies)

                for s in (0.3, 0.5, 0.8):
                    expected = q_s_gaussian(rho0, rho1, s) ** copies
                    assert abs(q_s_gaussian(product0, product1, s) / expected - 1) < 1e-9

    def test_chernoff_pair_components(self):
        """
        Test the split of Q_s into the prefactor and the quadratic form of the mean difference.
        """

        pair = ChernoffPair(thermal_state(0.2), thermal_loss_channel(coherent_state(0.4), 0, 0.5, 0.2))
        log_prefactor, combined = pair.components(0.5)
        displacement = pair.mean_difference
        expected = log_prefactor - float(displacement @ np.linalg.solve(combined, displacement)) / 2

        assert abs(pair.log_q_s(0.5) - expected) < 1e-14
        # Without displacement only the prefactor remains.
        assert abs(pair.log_q_s(0.5, np.zeros(2)) - log_prefactor) < 1e-14

        with self.assertRaises(ValueError):
            ChernoffPair(thermal_state(0.2), thermal_state(0.2, 2))

    def test_chernoff_exponent_per_mode(self):
        """
        Test the Chernoff exponent: zero for identical states, otherwise at least the Bhattacharyya value and attained
        at the returned s.
        """

        chi, _ = chernoff_exponent_per_mode(thermal_state(0.5), thermal_state(0.5))
        assert abs(chi) < 1e-12

        chi, s_star = chernoff_exponent_per_mode(thermal_state(0.1), thermal_state(2.0))
        assert chi >= -math.log(thermal_q_s(0.1, 2.0, 0.5)) - 1e-12
        assert 0 < s_star < 1
        assert abs(chi + math.log(thermal_q_s(0.1, 2.0, s_star))) < 1e-9

    def test_scenario_params(self):
        """
        Test the validation, the immutability and the replace method of the scenario parameters.
        """

        scenario = ScenarioParams(0.01, 0.2, 1000, 1e-3)

        assert scenario.prior1 == 0.5
        assert scenario.replace(m_modes=10).m_modes == 10
        assert abs(scenario.replace(prior0=0.3).prior1 - 0.7) < 1e-15
        assert scenario.replace(n_b=0.2) == scenario
        assert scenario.to_dict()["epsilon"] == 1e-3

        with self.assertRaises(AttributeError):
            scenario.eta = 0.5

        for invalid_parameters in ({"eta": 1.5, "n_b": 0.2}, {"eta": 0.1, "n_b": -1.0},
                                   {"eta": 0.1, "n_b": 0.2, "epsilon": 0.7},
                                   {"eta": 0.1, "n_b": 0.2, "m_modes": 2.5},
                                   {"eta": 0.1, "n_b": 0.2, "prior0": 1.0}):
            with self.assertRaises(ValueError):
                ScenarioParams(**invalid_parameters)
