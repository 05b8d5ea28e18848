"""
Analytical bounds of covert target detection: the fidelity lower bound for outputs of two thermal loss channels, the
error-probability bound it implies, the necessary condition for ε-covertness and the universal, probe-independent
covert error-probability bound.
"""

import math
import logging

import numpy as np

from pycovert.numerics import log_binomial, log_sum_exp
from pycovert.photon_stats import willie_argument


def nu(g0, g1):
    """
    Calculate ν = (√(G₀G₁) − √((G₀−1)(G₁−1)))^(−1) ∈ (0, 1] for two amplifier gains.
    """

    if g0 < 1 or g1 < 1:
        raise ValueError("Amplifier gains have to be at least 1, got {} and {}".format(g0, g1))

    return 1 / (math.sqrt(g0 * g1) - math.sqrt((g0 - 1) * (g1 - 1)))


class ChannelPair:
    """
    Describe the two hypotheses as thermal loss channels L_(κ₀, N₀) and L_(κ₁, N₁) acting on m_modes modes. Every
    channel is represented as amplifier of gain G = (1−κ)N + 1 after pure loss with transmittance κ̃ = κ/G.
    """

    def __init__(self, kappa0, kappa1, n0, n1, m_modes=1):
        for kappa in (kappa0, kappa1):
            if not 0 <= kappa <= 1:
                raise ValueError("Transmittances have to lie in [0, 1], got {}".format(kappa))

        if n0 < 0 or n1 < 0:
            raise ValueError("Excess noises have to be non-negative, got {} and {}".format(n0, n1))

        if int(m_modes) != m_modes or m_modes < 0:
            raise ValueError("The mode count has to be a non-negative integer, got {}".format(m_modes))

        self.kappa0 = float(kappa0)
        self.kappa1 = float(kappa1)
        self.n0 = float(n0)
        self.n1 = float(n1)
        self.m_modes = int(m_modes)

    @classmethod
    def target_detection(cls, scenario):
        """
        Get the pair of the target detection problem: the return is pure background (κ₀ = 0) without a target and the
        thermal loss channel of reflectivity η with a target, both with background N_B.
        """

        return cls(0.0, scenario.eta, scenario.n_b, scenario.n_b, scenario.m_modes)

    @property
    def gain0(self):
        """
        Get the gain G₀ = (1 − κ₀)N₀ + 1 of the channel without a target.
        """

        return (1 - self.kappa0) * self.n0 + 1

    @property
    def gain1(self):
        """
        Get the gain G₁ = (1 − κ₁)N₁ + 1 of the channel with a target.
        """

        return (1 - self.kappa1) * self.n1 + 1

    @property
    def nu(self):
        """
        Get ν(G₀, G₁) of the two gains, which is 1 for equal gains.
        """

        return nu(self.gain0, self.gain1)

    def bracket(self):
        """
        Get the per-photon factor ν√(κ̃₀κ̃₁) + √((1−κ̃₀)(1−κ̃₁)) of the fidelity bound.
        """

        pure_loss0 = self.kappa0 / self.gain0
        pure_loss1 = self.kappa1 / self.gain1

        return self.nu * math.sqrt(pure_loss0 * pure_loss1) + math.sqrt((1 - pure_loss0) * (1 - pure_loss1))

    def __repr__(self):
        return "ChannelPair(kappa0={}, kappa1={}, n0={}, n1={}, m_modes={})".format(self.kappa0, self.kappa1,
                                                                                   self.n0, self.n1, self.m_modes)


class BoundReport:
    """
    Collect a fidelity lower bound, the error-probability lower bound derived from it and the per-mode exponent of the
    bound for one parameter point. The logarithmic values stay finite where the bound underflows.
    """

    def __init__(self, log_fidelity_lb, log_pe_lb, exponent, meta=None, guard_ok=True):
        self.log_fidelity_lb = float(log_fidelity_lb)
        self.log_pe_lb = float(log_pe_lb)
        self.fidelity_lb = math.exp(self.log_fidelity_lb) if not math.isnan(self.log_fidelity_lb) else math.nan
        self.pe_lb = math.exp(self.log_pe_lb) if not math.isnan(self.log_pe_lb) else math.nan
        self.exponent = float(exponent)
        self.meta = dict(meta) if meta else {}
        self.guard_ok = bool(guard_ok)

    @property
    def log10_pe_lb(self):
        return self.log_pe_lb / math.log(10)

    def to_dict(self):
        report = {"fidelity_lb": self.fidelity_lb, "pe_lb": self.pe_lb, "log10_pe_lb": self.log10_pe_lb,
                  "exponent": self.exponent, "guard_ok": self.guard_ok}
        report.update(self.meta)

        return report

    def __repr__(self):
        return "BoundReport(fidelity_lb={}, pe_lb={}, exponent={}, guard_ok={})".format(
            self.fidelity_lb, self.pe_lb, self.exponent, self.guard_ok)


def fidelity_lb_channels(pmf, pair):
    """
    Calculate the fidelity lower bound ν^M Σ p_n [ν√(κ̃₀κ̃₁) + √((1−κ̃₀)(1−κ̃₁))]^n for a probe with total photon
    number distribution pmf, in the log domain.
    """

    return math.exp(log_fidelity_lb_channels(pmf, pair))


def log_fidelity_lb_channels(pmf, pair):
    """
    Calculate the logarithm of the fidelity lower bound of fidelity_lb_channels. A vanishing bracket keeps only the
    vacuum term of the sum.
    """

    bracket = pair.bracket()
    photon_numbers = pmf.photon_numbers()

    if bracket > 0:
        log_powers = photon_numbers * math.log(bracket)

    else:
        # 0^0 = 1, every other power vanishes.
        log_powers = np.where(photon_numbers == 0, 0.0, -np.inf)

    return pair.m_modes * math.log(pair.nu) + log_sum_exp(pmf.log_weights + log_powers)


def fidelity_lb_energy_only(total_energy, pair):
    """
    Calculate the energy-only bound ν^M·b^𝒩 with the per-photon factor b of the pair. By convexity of b^n it never
    exceeds the bound of any pmf with mean 𝒩. For the target detection pair b = (1 − γ)^(1/2).
    """

    if total_energy < 0:
        raise ValueError("The total probe energy has to be non-negative, got {}".format(total_energy))

    bracket = pair.bracket()

    if bracket == 0:
        return pair.nu ** pair.m_modes if total_energy == 0 else 0.0

    return math.exp(pair.m_modes * math.log(pair.nu) + total_energy * math.log(bracket))


def gamma_factor(eta, n_b):
    """
    Calculate γ = η/((1−η)N_B + 1).
    """

    return eta / ((1 - eta) * n_b + 1)


def log_pe_lb_from_log_fidelity(log_fidelity, priors=(0.5, 0.5)):
    """
    Calculate ln[(1 − √(1 − 4λ₀λ₁F²))/2] from ln F. With u = 4λ₀λ₁F² the bound is u/(2(1 + √(1−u))), which stays
    accurate when F² underflows.
    """

    prior0, prior1 = priors

    if log_fidelity == -math.inf:
        return -math.inf

    log_u = math.log(4 * prior0 * prior1) + 2 * log_fidelity
    u = min(math.exp(log_u), 1.0)

    return log_u - math.log(2) - math.log1p(math.sqrt(1 - u))


def pe_lb_from_fidelity(fidelity, priors=(0.5, 0.5)):
    """
    Calculate the error-probability lower bound (1 − √(1 − 4λ₀λ₁F²))/2, which is (1 − √(1 − F²))/2 for equal priors.
    """

    if not 0 <= fidelity <= 1 + 1e-12:
        raise ValueError("A fidelity has to lie in [0, 1], got {}".format(fidelity))

    if fidelity == 0:
        return 0.0

    return math.exp(log_pe_lb_from_log_fidelity(math.log(min(fidelity, 1.0)), priors))


def thermal_log_weights(photon_numbers, n_b, m_modes):
    """
    Get ln[C(n+M−1, n)·N_B^n/(N_B+1)^(n+M)] for the given photon numbers, without truncation or normalization.
    """

    photon_numbers = np.asarray(photon_numbers, dtype=float)

    if m_modes == 0 or n_b == 0:
        return np.where(photon_numbers == 0, 0.0, -np.inf)

    return (log_binomial(photon_numbers + m_modes - 1, photon_numbers)
            + photon_numbers * (math.log(n_b) - math.log1p(n_b)) - m_modes * math.log1p(n_b))


def covertness_lhs(q, n_b, m_modes):
    """
    Calculate Σ √(q_n·p_n) between a pmf q of the adversary's total photon number and the background pmf p of M thermal
    modes with brightness N_B.
    """

    log_background = thermal_log_weights(q.photon_numbers(), n_b, m_modes)

    return min(1.0, math.exp(log_sum_exp((q.log_weights + log_background) / 2)))


def covert_threshold(scenario):
    """
    Get the right-hand side (min(λ₀, λ₁) − ε)/√(λ₀λ₁) of the ε-covertness condition, which is 1 − 2ε for equal priors
    and 0 once the constraint is vacuous.
    """

    threshold = (min(scenario.prior0, scenario.prior1) - scenario.epsilon) / math.sqrt(scenario.prior0
                                                                                        * scenario.prior1)

    return max(0.0, threshold)


def covert_argument(scenario):
    """
    Get (Θ, x): Θ = (1 − γ)^(1/2) is the per-photon factor of the target detection fidelity bound and x the argument of
    the adversary's generating function that the thermal loss transform maps onto Θ.
    """

    theta = math.sqrt(1 - gamma_factor(scenario.eta, scenario.n_b))
    argument, _ = willie_argument(scenario, theta)

    return theta, argument


def covert_guard(scenario, argument):
    """
    Check the convergence condition N_B/(N_B+1) ≤ x ≤ 1 of the universal covert bound.
    """

    lower_limit = scenario.n_b / (scenario.n_b + 1)

    return lower_limit * (1 - 1e-14) <= argument <= 1 + 1e-14


def log_covert_rate_base(scenario):
    """
    Calculate ln f with f = ν·(N_B + 1 − N_B/x)·[ηN_B(1−x) + 1], returning (ln f, x, guard flag). ln f is nan where the
    middle factor is not positive.
    """

    _, argument = covert_argument(scenario)
    guard_ok = covert_guard(scenario, argument)
    n_b, eta = scenario.n_b, scenario.eta

    # ν between the return without a target (G = N_B + 1) and with a target (G = (1−η)N_B + 1).
    channel_nu = nu(n_b + 1, (1 - eta) * n_b + 1)
    middle_factor = n_b + 1 - n_b / argument if argument != 0 else -math.inf

    if middle_factor <= 0:
        return math.nan, argument, False

    log_base = math.log(channel_nu) + math.log(middle_factor) + math.log1p(eta * n_b * (1 - argument))

    return log_base, argument, guard_ok


def covert_pe_lb(scenario):
    """
    Calculate the universal lower bound on Alice's error probability under ε-covertness. The fidelity bound is t²·f^M
    with the covert threshold t, the error bound is (1 − √(1 − t⁴f^(2M)))/2 and the reported exponent is −2 ln f.
    A violated convergence condition is logged and flagged in the report, the values are still returned.
    """

    threshold = covert_threshold(scenario)
    log_base, argument, guard_ok = log_covert_rate_base(scenario)
    meta = {"eta": scenario.eta, "nb": scenario.n_b, "eps": scenario.epsilon, "m": scenario.m_modes,
            "x": argument}

    if not guard_ok:
        logging.warning("The convergence condition of the covert bound is violated at eta={}, n_b={} (x={})".format(
            scenario.eta, scenario.n_b, argument), extra={"flag": "covert_guard_violated",
                                                          "grid_point": scenario.to_dict()})

    if math.isnan(log_base):
        return BoundReport(math.nan, math.nan, math.nan, meta, guard_ok=False)

    log_threshold = math.log(threshold) if threshold > 0 else -math.inf
    log_fidelity = 2 * log_threshold + scenario.m_modes * log_base if scenario.m_modes else 2 * log_threshold
    log_pe = log_pe_lb_from_log_fidelity(min(log_fidelity, 0.0), (scenario.prior0, scenario.prior1))

    return BoundReport(log_fidelity, log_pe, -2 * log_base, meta, guard_ok)
