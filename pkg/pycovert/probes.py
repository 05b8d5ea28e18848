"""
Performance of the two Gaussian probe families, two-mode squeezed vacuum (TMSV) with a retained idler and Gaussian
distributed coherent states (GCS): the energy budget that keeps a thermal-looking probe ε-covert, per-mode Chernoff
and Bhattacharyya exponents, and the error-probability curves built from them.
"""

import math
import logging

import numpy as np

from pycovert.bounds import covert_pe_lb
from pycovert.gaussian import (ChernoffPair, ScenarioParams, alice_received, chernoff_exponent_per_mode,
                               thermal_state, tmsv_state)
from pycovert.numerics import (SolverConfig, bisect_increasing, integrate_radial, log_binomial, log_sum_exp,
                               minimize_scalar)
from pycovert.photon_stats import thermal_total_pmf
from pycovert.sweep_executor import SweepExecutor

PROBE_KINDS = ("tmsv", "gcs")
EXPONENT_METHODS = ("exact-qcb", "bhattacharyya", "closed-form-approx")


class ProbeSpec:
    """
    Describe a probe family with its per-mode signal energy n_s.
    """

    def __init__(self, kind, n_s):
        if kind not in PROBE_KINDS:
            raise ValueError("Unknown probe kind {}, expected one of {}".format(kind, PROBE_KINDS))

        if not 0 <= n_s < math.inf:
            raise ValueError("The signal energy has to be finite and non-negative, got {}".format(n_s))

        self.kind = kind
        self.n_s = float(n_s)

    def exponent(self, eta, n_b, method="exact-qcb"):
        if self.kind == "tmsv":
            return exponent_tmsv(eta, self.n_s, n_b, method)

        return exponent_gcs(eta, self.n_s, n_b, method)

    def __repr__(self):
        return "ProbeSpec(kind={}, n_s={})".format(self.kind, self.n_s)


class ExponentReport:
    """
    Hold a per-mode error exponent χ, the exponent s of the Chernoff quantity it belongs to and the method.
    """

    def __init__(self, chi, s_star, method, converged=True):
        if method not in EXPONENT_METHODS:
            raise ValueError("Unknown exponent method {}, expected one of {}".format(method, EXPONENT_METHODS))

        self.chi = float(chi)
        self.s_star = float(s_star)
        self.method = method
        self.converged = bool(converged)

    def log10_error_probability(self, m_modes):
        """
        Get log10 of the Chernoff bound exp(−M·χ)/2 on the error probability of M modes.
        """

        return (-m_modes * self.chi - math.log(2)) / math.log(10)

    def __repr__(self):
        return "ExponentReport(chi={}, s_star={}, method={}, converged={})".format(self.chi, self.s_star,
                                                                                   self.method, self.converged)


def _check_exponent_arguments(eta, n_s, n_b, method):
    if method not in EXPONENT_METHODS:
        raise ValueError("Unknown exponent method {}, expected one of {}".format(method, EXPONENT_METHODS))

    if not 0 <= eta <= 1 or n_s < 0 or n_b < 0:
        raise ValueError("Invalid probe parameters eta={}, n_s={}, n_b={}".format(eta, n_s, n_b))

    if method == "closed-form-approx" and n_s != n_b:
        raise ValueError("The closed-form exponent needs perfect covertness n_s = n_b, got n_s={} and "
                         "n_b={}".format(n_s, n_b))


def exponent_tmsv(eta, n_s, n_b, method="exact-qcb"):
    """
    Calculate the per-mode exponent of a TMSV probe. exact-qcb minimizes −ln Q_s over s, bhattacharyya uses s = 1/2 and
    closed-form-approx is the leading-order rate −ln[1 − (η/4)(1 − 1/(2N_B+1)²)] at n_s = n_b.
    """

    _check_exponent_arguments(eta, n_s, n_b, method)

    if method == "closed-form-approx":
        return ExponentReport(-math.log1p(-eta / 4 * (1 - 1 / (2 * n_b + 1) ** 2)), 0.5, method)

    scenario = ScenarioParams(eta, n_b)
    probe = tmsv_state(n_s)
    rho0 = alice_received(probe, 0, scenario)
    rho1 = alice_received(probe, 1, scenario)

    if method == "bhattacharyya":
        return ExponentReport(max(0.0, -ChernoffPair(rho0, rho1).log_q_s(0.5)), 0.5, method)

    chi, s_star = chernoff_exponent_per_mode(rho0, rho1)

    return ExponentReport(chi, s_star, method)


class GcsChernoffIntegrand:
    """
    Evaluate Q_s[α] between thermal background (no target) and the displaced thermal return of a coherent probe with
    amplitude |α| = r (target present). By phase symmetry it depends on r only. The matrices of the Chernoff formula
    are cached per s, so one quadrature needs a single decomposition.
    """

    def __init__(self, eta, n_b):
        self.eta = eta
        self.pair = ChernoffPair(thermal_state(n_b), thermal_state((1 - eta) * n_b))
        self.cache = {}

    def log_q(self, s, radius):
        if s not in self.cache:
            log_prefactor, combined = self.pair.components(s)
            self.cache[s] = (log_prefactor, np.linalg.inv(combined))

        log_prefactor, inverse = self.cache[s]
        # Mean difference √2·√(2η)·(r, 0) in the vacuum-variance-1 convention.
        difference = np.array([2 * math.sqrt(self.eta) * radius, 0.0])

        return log_prefactor - float(difference @ inverse @ difference) / 2

    def q(self, s, radius):
        return math.exp(self.log_q(s, radius))

    def minimal_q(self, radius):
        _, log_q_minimum, _ = minimize_scalar(lambda s: self.log_q(s, radius), 0.0, 1.0, SolverConfig(abs_tol=1e-9))

        return math.exp(min(log_q_minimum, self.log_q(0.5, radius)))


def exponent_gcs(eta, n_s, n_b, method="exact-qcb", s=0.5, per_alpha=False, config=None):
    """
    Calculate the per-mode exponent −ln ∫ P(α)·Q_s[α] d²α of a GCS probe, with P the circular Gaussian of energy n_s.
    exact-qcb minimizes over a common s outside the integral, or over s inside the integral with per_alpha;
    bhattacharyya keeps s fixed (default 1/2). closed-form-approx is −ln[1 − 2ηN_B(N_B − √(N_B(N_B+1)) + 1/2)] at
    n_s = n_b.
    """

    _check_exponent_arguments(eta, n_s, n_b, method)

    if config is None:
        config = SolverConfig()

    if method == "closed-form-approx":
        bracket = 2 * eta * n_b * (n_b - math.sqrt(n_b * (n_b + 1)) + 0.5)

        return ExponentReport(-math.log1p(-bracket), 0.5, method)

    integrand = GcsChernoffIntegrand(eta, n_b)

    def averaged_q(exponent):
        value, converged = integrate_radial(lambda radius: integrand.q(exponent, radius), n_s, config)

        return value, converged

    if method == "bhattacharyya":
        value, converged = averaged_q(s)

        return ExponentReport(max(0.0, -math.log(value)), s, method, converged)

    if per_alpha:
        value, converged = integrate_radial(integrand.minimal_q, n_s, config)

        # No common s exists for the per-α minimum, 1/2 is reported.
        return ExponentReport(max(0.0, -math.log(value)), 0.5, method, converged)

    quadrature_converged = [True]

    def log_averaged_q(exponent):
        value, converged = averaged_q(exponent)
        quadrature_converged[0] = quadrature_converged[0] and converged

        return math.log(value)

    s_star, log_q_minimum, minimization_converged = minimize_scalar(log_averaged_q, 0.0, 1.0,
                                                                    SolverConfig(abs_tol=1e-9))
    log_q_half = log_averaged_q(0.5)

    if log_q_half < log_q_minimum:
        s_star, log_q_minimum = 0.5, log_q_half

    return ExponentReport(max(0.0, -log_q_minimum), s_star, method,
                          minimization_converged and quadrature_converged[0])


class ThermalTraceNorm:
    """
    Evaluate the trace norm between M-mode thermal states of brightness N_B and N as Σ_n |p_n(N_B) − p_n(N)| over the
    total photon number. Both distributions cross once, at n_t, so the norm is |S1 − S2| + |S3 − S4| with the masses
    below and above n_t. The binomial part of the log weights is shared by every N up to max_brightness.
    """

    def __init__(self, n_b, m_modes, max_brightness):
        self.n_b = n_b
        self.m_modes = m_modes
        cutoff = max(thermal_total_pmf(n_b, m_modes).cutoff, thermal_total_pmf(max_brightness, m_modes).cutoff)
        self.photon_numbers = np.arange(cutoff + 1, dtype=float)
        # ln C(n+M−1, n) for every stored n.
        self.log_binomials = log_binomial(self.photon_numbers + m_modes - 1, self.photon_numbers)
        self.log_background = self.log_weights(n_b)

    def log_weights(self, brightness):
        """
        Get ln p_n(N) of the M-mode thermal distribution on the stored photon numbers. The vacuum of N = 0 is a single
        atom at n = 0.
        """

        if brightness == 0:
            return np.where(self.photon_numbers == 0, 0.0, -np.inf)

        return (self.log_binomials + self.photon_numbers * (math.log(brightness) - math.log1p(brightness))
                - self.m_modes * math.log1p(brightness))

    def crossing(self, brightness):
        """
        Get n_t = ⌊M·ln[(N+1)/(N_B+1)] / ln[N(N_B+1)/((N+1)N_B)]⌋.
        """

        return math.floor(self.m_modes * (math.log1p(brightness) - math.log1p(self.n_b))
                          / (math.log(brightness) + math.log1p(self.n_b) - math.log1p(brightness)
                             - math.log(self.n_b)))

    def __call__(self, brightness):
        if brightness == self.n_b:
            return 0.0

        if self.n_b == 0:
            return -2 * math.expm1(-self.m_modes * math.log1p(brightness))

        log_other = self.log_weights(brightness)
        split = min(max(self.crossing(brightness) + 1, 0), self.photon_numbers.size)
        masses = [math.exp(log_sum_exp(log_values)) for log_values in (self.log_background[:split],
                                                                        log_other[:split],
                                                                        self.log_background[split:],
                                                                        log_other[split:])]

        return abs(masses[0] - masses[1]) + abs(masses[2] - masses[3])


def covert_ns_budget(scenario, config=None):
    """
    Calculate the largest per-mode energy N_S of a thermal-looking probe (TMSV or GCS) that keeps the trace norm
    between the adversary's hypotheses, M-mode thermal states of brightness N_B and (1−η)N_S + ηN_B, at most 4ε.
    """

    if config is None:
        config = SolverConfig()

    n_b, eta, m_modes = scenario.n_b, scenario.eta, scenario.m_modes

    if scenario.epsilon == 0 or eta == 1:
        return n_b

    target = 4 * scenario.epsilon

    if target >= 2 or m_modes == 0:
        logging.warning("The covertness constraint at {} admits any probe energy".format(scenario),
                        extra={"flag": "vacuous_covert_constraint", "grid_point": scenario.to_dict()})

        return math.inf

    def brightness(n_s):
        return (1 - eta) * n_s + eta * n_b

    upper = n_b + max(n_b, 1e-3)

    # Double the excess energy until the trace norm exceeds 4ε.
    while ThermalTraceNorm(n_b, m_modes, brightness(upper))(brightness(upper)) < target:
        upper = n_b + 2 * (upper - n_b)

        if upper > 1e12:
            logging.warning("No bracket for the covert energy budget at {}".format(scenario),
                            extra={"flag": "bracket_failure", "grid_point": scenario.to_dict()})

            return math.inf

    trace_norm = ThermalTraceNorm(n_b, m_modes, brightness(upper))
    budget, diagnostics = bisect_increasing(lambda n_s: trace_norm(brightness(n_s)), target, n_b, upper,
                                            limits=(n_b, upper), config=config)

    if not diagnostics.converged:
        logging.warning("The covert energy budget did not converge at {}".format(scenario),
                        extra={"flag": "budget_not_converged", "grid_point": scenario.to_dict()})

    return budget


def _perfect_covert_row(eta, n_b):
    """
    Get the perfect-covert row at N_S = N_B: the exact and the Bhattacharyya exponents of both probes and their ratio.
    The row is flagged unless all four exponents converged.
    """

    tmsv_qc = exponent_tmsv(eta, n_b, n_b, "exact-qcb")
    tmsv_qb = exponent_tmsv(eta, n_b, n_b, "bhattacharyya")
    gcs_qc = exponent_gcs(eta, n_b, n_b, "exact-qcb")
    gcs_qb = exponent_gcs(eta, n_b, n_b, "bhattacharyya")
    ratio = tmsv_qc.chi / gcs_qc.chi if gcs_qc.chi > 0 else math.nan

    return {"nb": n_b, "chi_tmsv_qc": tmsv_qc.chi, "chi_tmsv_qb": tmsv_qb.chi, "chi_gcs_qc": gcs_qc.chi,
            "chi_gcs_qb": gcs_qb.chi, "ratio": ratio,
            "flag": not all(report.converged for report in (tmsv_qc, tmsv_qb, gcs_qc, gcs_qb))}


def perfect_covert_sweep(eta, nb_grid, thread_count=None):
    """
    Get one row of TMSV and GCS exponents (Chernoff and Bhattacharyya) per background N_B, with the probe energy fixed
    to N_S = N_B. Rows keep the order of the grid.
    """

    executor = SweepExecutor(thread_count)

    return executor.execute(lambda n_b: _perfect_covert_row(eta, n_b), list(nb_grid))


def _covert_curve_row(scenario):
    n_s = covert_ns_budget(scenario)
    bound = covert_pe_lb(scenario)
    tmsv = exponent_tmsv(scenario.eta, n_s, scenario.n_b, "exact-qcb")
    gcs = exponent_gcs(scenario.eta, n_s, scenario.n_b, "exact-qcb")

    return {"m": scenario.m_modes, "ns": n_s, "log10_pe_bound": bound.log10_pe_lb,
            "log10_pe_tmsv": tmsv.log10_error_probability(scenario.m_modes),
            "log10_pe_gcs": gcs.log10_error_probability(scenario.m_modes), "bound_exponent": bound.exponent,
            "chi_tmsv": tmsv.chi, "chi_gcs": gcs.chi,
            "flag": not (bound.guard_ok and tmsv.converged and gcs.converged) or math.isinf(n_s)}


def covert_curves(scenario, m_grid, thread_count=None):
    """
    Get one row per mode count M with the universal covert bound and the Chernoff bounds of ε-covert TMSV and GCS
    probes at their covert energy budget, all error probabilities as log10.
    """

    executor = SweepExecutor(thread_count)

    return executor.execute(_covert_curve_row, [scenario.replace(m_modes=m_modes) for m_modes in m_grid])


def error_probability_advantage(eta, n_b, m_modes, method="exact-qcb"):
    """
    Get log10 of the ratio of the GCS and the TMSV error-probability bounds at perfect covertness,
    M·(χ_TMSV − χ_GCS)/ln 10.
    """

    chi_tmsv = exponent_tmsv(eta, n_b, n_b, method).chi
    chi_gcs = exponent_gcs(eta, n_b, n_b, method).chi

    return m_modes * (chi_tmsv - chi_gcs) / math.log(10)
