import unittest
import math

import numpy as np
from scipy import stats

from pycovert.covert_opt import energy_limits, fit_power_law
from pycovert.gaussian import ScenarioParams, coherent_state, thermal_state, thermal_loss_channel, q_s_gaussian
from pycovert.probes import ProbeSpec, ExponentReport, GcsChernoffIntegrand, ThermalTraceNorm, exponent_tmsv, \
    exponent_gcs, covert_ns_budget, perfect_covert_sweep, error_probability_advantage

# Leading-order exponents at η = 0.01 and N_S = N_B = 0.2.
CHI_TMSV_APPROX = 0.01 / 4 * (1 - 1 / 1.4 ** 2)
CHI_GCS_APPROX = 2 * 0.01 * 0.2 * (0.2 - math.sqrt(0.2 * 1.2) + 0.5)


def thermal_bhattacharyya(n0, n1):
    return 1 / (math.sqrt((n0 + 1) * (n1 + 1)) - math.sqrt(n0 * n1))


class TestProbesMethods(unittest.TestCase):
    """
    Test the probe exponents, the covert energy budget of thermal-looking probes and the perfect-covert sweep.
    """

    def test_closed_form_exponents(self):
        """
        Test the leading-order exponents of TMSV and GCS probes at η = 0.01 and N_S = N_B = 0.2.
        """

        tmsv = exponent_tmsv(0.01, 0.2, 0.2, "closed-form-approx")
        gcs = exponent_gcs(0.01, 0.2, 0.2, "closed-form-approx")

        assert abs(tmsv.chi / 1.2245e-3 - 1) < 2e-3
        assert abs(gcs.chi / 8.404e-4 - 1) < 2e-3
        assert abs(tmsv.chi / gcs.chi - 1.45) < 0.02

        with self.assertRaises(ValueError):
            exponent_tmsv(0.01, 0.3, 0.2, "closed-form-approx")

        with self.assertRaises(ValueError):
            exponent_gcs(0.01, 0.2, 0.2, "fidelity")

    def test_exact_exponents(self):
        """
        Test the Chernoff exponents against the leading-order forms within 3%, and the agreement of the Chernoff and the
        Bhattacharyya values within 2%.
        """

        tmsv_qc = exponent_tmsv(0.01, 0.2, 0.2)
        tmsv_qb = exponent_tmsv(0.01, 0.2, 0.2, "bhattacharyya")
        gcs_qc = exponent_gcs(0.01, 0.2, 0.2)
        gcs_qb = exponent_gcs(0.01, 0.2, 0.2, "bhattacharyya")

        assert abs(tmsv_qc.chi / CHI_TMSV_APPROX - 1) < 0.03
        assert abs(gcs_qc.chi / CHI_GCS_APPROX - 1) < 0.03

        for chernoff, bhattacharyya in ((tmsv_qc, tmsv_qb), (gcs_qc, gcs_qb)):
            assert chernoff.converged is True
            assert chernoff.chi >= bhattacharyya.chi
            assert chernoff.chi / bhattacharyya.chi - 1 < 0.02
            assert abs(chernoff.s_star - 0.5) < 0.05

        assert tmsv_qc.chi > gcs_qc.chi

    def test_exponents_without_target_signature(self):
        """
        Test η = 0, where both hypotheses coincide, and the GCS exponent without signal, which is the thermal
        Bhattacharyya exponent between N_B and (1−η)N_B.
        """

        assert abs(exponent_tmsv(0.0, 0.3, 0.3).chi) < 1e-12
        assert abs(exponent_gcs(0.0, 0.3, 0.3).chi) < 1e-12

        chi = exponent_gcs(0.01, 0.0, 0.2, "bhattacharyya").chi
        assert abs(chi + math.log(thermal_bhattacharyya(0.2, 0.198))) < 1e-12

    def test_gcs_integrand(self):
        """
        Test the cached GCS integrand against the Chernoff formula for a displaced thermal return at several phases.
        """

        integrand = GcsChernoffIntegrand(0.05, 0.4)
        background = thermal_state(0.4)

        for phase in (0.0, 1.0, 2.5):
            alpha = 0.7 * complex(math.cos(phase), math.sin(phase))
            target_return = thermal_loss_channel(coherent_state(alpha), 0, 0.05, 0.4)

            for s in (0.3, 0.5):
                assert abs(q_s_gaussian(background, target_return, s) - integrand.q(s, 0.7)) < 1e-12

        # The per-α minimum is never above the value at s = 1/2.
        assert integrand.minimal_q(0.7) <= integrand.q(0.5, 0.7)

    def test_probe_spec_and_report(self):
        """
        Test the probe description and the error probability of M modes from a per-mode exponent.
        """

        spec = ProbeSpec("tmsv", 0.2)
        assert abs(spec.exponent(0.01, 0.2).chi - exponent_tmsv(0.01, 0.2, 0.2).chi) < 1e-15

        with self.assertRaises(ValueError):
            ProbeSpec("squeezed", 0.2)

        with self.assertRaises(ValueError):
            ProbeSpec("gcs", -0.1)

        report = ExponentReport(1e-3, 0.5, "exact-qcb")
        assert abs(report.log10_error_probability(1000) - math.log10(math.exp(-1.0) / 2)) < 1e-12

        with self.assertRaises(ValueError):
            ExponentReport(1e-3, 0.5, "helstrom")

    def test_thermal_trace_norm(self):
        """
        Test the split trace norm against the direct sum of the negative binomial distributions.
        """

        trace_norm = ThermalTraceNorm(0.2, 3, 0.5)
        photon_numbers = np.arange(400)
        direct = np.sum(np.abs(stats.nbinom.pmf(photon_numbers, 3, 1 / 1.2)
                               - stats.nbinom.pmf(photon_numbers, 3, 1 / 1.5)))

        assert abs(trace_norm(0.5) - direct) < 1e-12
        assert trace_norm(0.2) == 0.0

        vacuum = ThermalTraceNorm(0.0, 4, 0.3)
        assert abs(vacuum(0.3) - 2 * (1 - 1.3 ** -4)) < 1e-12

    def test_covert_ns_budget(self):
        """
        Test the covert energy budget: N_B without slack, above N_B otherwise, increasing in ε and below the upper
        energy limit of all probes.
        """

        scenario = ScenarioParams(0.01, 0.2, 10 ** 4, 1e-3)
        budget = covert_ns_budget(scenario)

        assert covert_ns_budget(scenario.replace(epsilon=0.0)) == 0.2
        assert 0.2 < budget < energy_limits(scenario).ns_max
        assert covert_ns_budget(scenario.replace(epsilon=1e-2)) > budget
        assert covert_ns_budget(scenario.replace(epsilon=0.5)) == math.inf

    def test_covert_ns_budget_scaling(self):
        """
        Test that the excess energy of the budget decays like M^(−1/2).
        """

        m_values = [10 ** 2, 10 ** 3, 10 ** 4, 10 ** 5]
        scenario = ScenarioParams(0.01, 0.2, 1, 1e-3)
        excesses = [covert_ns_budget(scenario.replace(m_modes=m_modes)) - 0.2 for m_modes in m_values]
        _, exponent = fit_power_law(m_values, excesses)

        assert all(later < earlier for earlier, later in zip(excesses, excesses[1:]))
        assert abs(exponent - 0.5) < 0.1

    def test_perfect_covert_sweep(self):
        """
        Test the rows of the perfect-covert sweep: grid order, exponent ordering and the maximum ratio near N_B = 0.2.
        """

        nb_grid = [0.05, 0.2, 2.0]
        rows = perfect_covert_sweep(0.01, nb_grid, thread_count=2)

        assert [row["nb"] for row in rows] == nb_grid
        assert set(rows[0]) == {"nb", "chi_tmsv_qc", "chi_tmsv_qb", "chi_gcs_qc", "chi_gcs_qb", "ratio", "flag"}

        for row in rows:
            assert row["flag"] is False
            assert row["chi_tmsv_qc"] >= row["chi_gcs_qc"]

        assert rows[1]["ratio"] > max(rows[0]["ratio"], rows[2]["ratio"])
        assert abs(rows[1]["ratio"] - 1.45) < 0.05

    def test_error_probability_advantage(self):
        """
        Test that the advantage is M·(χ_TMSV − χ_GCS)/ln 10 and grows linearly with M.
        """

        chi_difference = exponent_tmsv(0.01, 0.3, 0.3).chi - exponent_gcs(0.01, 0.3, 0.3).chi

        assert abs(error_probability_advantage(0.01, 0.3, 1000) - 1000 * chi_difference / math.log(10)) < 1e-12
        assert error_probability_advantage(0.01, 0.3, 2000) > error_probability_advantage(0.01, 0.3, 1000) > 0
