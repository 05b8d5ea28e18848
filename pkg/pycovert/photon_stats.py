"""
Distributions of the total photon number over M modes and their probability generating functions, including the exact
transform of a generating function under M parallel thermal loss channels.
"""

import math

import numpy as np

from pycovert.numerics import log_binomial, log_gamma, log_sum_exp

# Truncation stops when the geometric tail bound is below this fraction of the accumulated mass.
RELATIVE_TAIL_BOUND = 1e-15
MAXIMUM_TRUNCATION_TAIL = 1e-10


class PhotonPmf:
    """
    Store a distribution p_n of the total photon number n = 0..d by its natural-log weights. truncation_tail bounds the
    mass beyond d.
    """

    def __init__(self, log_weights, truncation_tail=0.0):
        log_weights = np.array(log_weights, dtype=float)

        if log_weights.ndim != 1 or log_weights.size == 0:
            raise ValueError("A photon-number pmf needs a non-empty one-dimensional weight sequence")

        if np.any(np.isnan(log_weights)) or np.any(log_weights == np.inf):
            raise ValueError("The log weights of a photon-number pmf must be finite or −inf")

        if not 0 <= truncation_tail < MAXIMUM_TRUNCATION_TAIL:
            raise ValueError("The truncation tail {} is not below {}".format(truncation_tail,
                                                                             MAXIMUM_TRUNCATION_TAIL))

        total = math.exp(log_sum_exp(log_weights))

        if not 1 - truncation_tail - 1e-12 <= total <= 1 + 1e-12:
            raise ValueError("The weights of a photon-number pmf sum to {}, expected 1 within the truncation tail "
                             "{}".format(total, truncation_tail))

        log_weights.setflags(write=False)
        self.log_weights = log_weights
        self.truncation_tail = float(truncation_tail)

    @classmethod
    def from_probabilities(cls, probabilities, truncation_tail=0.0):
        probabilities = np.asarray(probabilities, dtype=float)

        if np.any(probabilities < 0):
            raise ValueError("Probabilities must be non-negative")

        with np.errstate(divide="ignore"):
            return cls(np.log(probabilities), truncation_tail)

    @classmethod
    def point_mass(cls, photon_number):
        log_weights = np.full(photon_number + 1, -np.inf)
        log_weights[photon_number] = 0.0

        return cls(log_weights)

    @property
    def cutoff(self):
        """
        Get the largest stored photon number d.
        """

        return self.log_weights.size - 1

    def photon_numbers(self):
        return np.arange(self.log_weights.size, dtype=float)

    def probabilities(self):
        return np.exp(self.log_weights)

    def total_mass(self):
        return math.exp(log_sum_exp(self.log_weights))

    def mean(self):
        return float(np.sum(self.photon_numbers() * self.probabilities()))

    def __repr__(self):
        return "PhotonPmf(cutoff={}, mean={}, truncation_tail={})".format(self.cutoff, self.mean(),
                                                                         self.truncation_tail)


def _adaptive_log_weights(log_weight_function, ratio_function, start_cutoff):
    """
    Grow the cutoff d by doubling until the geometric tail bound p_d·r/(1−r), with r the ratio p_(d+1)/p_d, is below
    the relative tail bound. Returns the normalized log weights and the tail bound.
    """

    cutoff = max(int(start_cutoff), 8)

    while True:
        log_weights = log_weight_function(np.arange(cutoff + 1, dtype=float))
        log_total = log_sum_exp(log_weights)
        ratio = ratio_function(cutoff)

        if ratio < 1:
            log_tail = log_weights[-1] + math.log(ratio) - math.log1p(-ratio) if ratio > 0 else -math.inf

            if log_tail - log_total < math.log(RELATIVE_TAIL_BOUND):
                return log_weights - log_total, math.exp(log_tail - log_total)

        cutoff *= 2


def thermal_total_pmf(n_mean, m_modes, d=None):
    """
    Get the negative-binomial distribution C(n+M−1, n)·N^n/(N+1)^(n+M) of the total photon number of M thermal modes
    with mean N each. Without an explicit cutoff d, the cutoff grows until the neglected tail is below 1e-15 of the
    mass.
    """

    if n_mean < 0:
        raise ValueError("The thermal mean photon number has to be non-negative, got {}".format(n_mean))

    if n_mean == 0 or m_modes == 0:
        return PhotonPmf.point_mass(0)

    log_occupation = math.log(n_mean) - math.log1p(n_mean)
    log_vacuum = -m_modes * math.log1p(n_mean)

    def log_weight_function(photon_numbers):
        return (log_binomial(photon_numbers + m_modes - 1, photon_numbers) + photon_numbers * log_occupation
                + log_vacuum)

    if d is not None:
        log_weights = log_weight_function(np.arange(d + 1, dtype=float))

        return PhotonPmf(log_weights, max(0.0, -math.expm1(log_sum_exp(log_weights))))

    def ratio_function(cutoff):
        return (cutoff + m_modes) / (cutoff + 1) * n_mean / (n_mean + 1)

    mean = m_modes * n_mean
    deviation = math.sqrt(m_modes * n_mean * (n_mean + 1))
    log_weights, tail = _adaptive_log_weights(log_weight_function, ratio_function, mean + 12 * deviation + 40)

    return PhotonPmf(log_weights, tail)


def poisson_total_pmf(n_mean, d=None):
    """
    Get the Poisson distribution of the total photon number of a coherent-state probe with mean photon number n_mean.
    """

    if n_mean < 0:
        raise ValueError("The Poisson mean has to be non-negative, got {}".format(n_mean))

    if n_mean == 0:
        return PhotonPmf.point_mass(0)

    def log_weight_function(photon_numbers):
        return photon_numbers * math.log(n_mean) - n_mean - log_gamma(photon_numbers + 1)

    if d is not None:
        log_weights = log_weight_function(np.arange(d + 1, dtype=float))

        return PhotonPmf(log_weights, max(0.0, -math.expm1(log_sum_exp(log_weights))))

    def ratio_function(cutoff):
        return n_mean / (cutoff + 1)

    log_weights, tail = _adaptive_log_weights(log_weight_function, ratio_function,
                                              n_mean + 12 * math.sqrt(n_mean) + 40)

    return PhotonPmf(log_weights, tail)


class Pgf:
    """
    Wrap a generating function ξ ↦ Σ p_n ξ^n of a total photon number over m_modes modes together with the radius
    |ξ| ≤ domain_radius inside which it is guaranteed to converge. Transformed generating functions whose domain is
    not symmetric around 0 bound negative arguments by negative_radius instead.
    """

    def __init__(self, function, domain_radius, m_modes=1, negative_radius=None):
        self.function = function
        self.domain_radius = float(domain_radius)
        self.m_modes = int(m_modes)
        self.negative_radius = self.domain_radius if negative_radius is None else float(negative_radius)

    def eval(self, xi):
        """
        Evaluate the generating function, arguments outside the convergence region raise a ValueError.
        """

        radius = self.negative_radius if xi < 0 else self.domain_radius

        if abs(xi) > radius * (1 + 1e-12):
            raise ValueError("The argument {} lies outside the convergence radius {} of the generating "
                             "function".format(xi, radius))

        return self.function(xi)

    def __call__(self, xi):
        return self.eval(xi)

    def __repr__(self):
        return "Pgf(domain_radius={}, m_modes={})".format(self.domain_radius, self.m_modes)


def _tail_radius(log_weights):
    # Reciprocal of the largest ratio p_(n+1)/p_n among the last stored finite weights.
    finite_weights = log_weights[np.isfinite(log_weights)]
    finite_indices = np.flatnonzero(np.isfinite(log_weights))

    if finite_weights.size < 2 or finite_indices[-1] < log_weights.size - 1:
        return math.inf

    tail_indices = finite_indices[-8:]
    tail_weights = log_weights[tail_indices]
    log_ratios = np.diff(tail_weights) / np.diff(tail_indices)

    return math.exp(-float(np.max(log_ratios)))


def pgf_of_pmf(pmf, m_modes=1):
    """
    Get the generating function of a stored pmf. Non-negative arguments are summed in the log domain, negative
    arguments with exactly rounded signed summation.
    """

    log_weights = pmf.log_weights
    photon_numbers = pmf.photon_numbers()

    def evaluate(xi):
        if xi == 0:
            return math.exp(log_weights[0])

        log_terms = log_weights + photon_numbers * math.log(abs(xi))

        if xi > 0:
            return math.exp(log_sum_exp(log_terms))

        signs = np.where(photon_numbers % 2 == 0, 1.0, -1.0)

        return math.fsum(signs * np.exp(log_terms))

    return Pgf(evaluate, _tail_radius(log_weights), m_modes)


def _loss_channel_parameters(kappa, n_env):
    gain = (1 - kappa) * n_env + 1

    return gain, kappa / gain


def pgf_through_thermal_loss(pgf_in, kappa, n_env, m_modes):
    """
    Get the generating function of the total photon number after M parallel thermal loss channels L_(κ, n_env). The
    channel is the quantum-limited amplifier of gain G = (1−κ)n_env + 1 after the pure loss channel κ̃ = κ/G, so
    P_out(ξ) = [G − ξ(G−1)]^(−M) · P_in(1 − κ̃ + κ̃ξ / (G − ξ(G−1))).
    """

    if not 0 <= kappa <= 1:
        raise ValueError("The transmittance has to lie in [0, 1], got {}".format(kappa))

    if n_env < 0:
        raise ValueError("The environment brightness has to be non-negative, got {}".format(n_env))

    gain, pure_loss = _loss_channel_parameters(kappa, n_env)

    def evaluate(xi):
        denominator = gain - xi * (gain - 1)

        if denominator <= 0:
            raise ValueError("The argument {} lies outside the convergence region of the thermal loss "
                             "transform".format(xi))

        argument = 1 - pure_loss + pure_loss * xi / denominator

        return math.exp(-m_modes * math.log(denominator)) * pgf_in.eval(argument)

    # Radius where the composite argument reaches the input radius, limited by the pole at G/(G−1).
    pole = gain / (gain - 1) if gain > 1 else math.inf

    if pure_loss == 0:
        radius = pole

    elif math.isinf(pgf_in.domain_radius):
        radius = pole

    else:
        excess = pgf_in.domain_radius - 1 + pure_loss
        radius = min(pole, excess * gain / (pure_loss + excess * (gain - 1)))

    return Pgf(evaluate, radius, m_modes)


def willie_pgf(probe_pgf, scenario):
    """
    Get the generating function of the total photon number the adversary collects under hypothesis 1: the probe
    passes L_(1−η, N_B) in every mode.
    """

    return pgf_through_thermal_loss(probe_pgf, 1 - scenario.eta, scenario.n_b, scenario.m_modes)


def willie_pgf_from_probe(probe_pgf, scenario, xi):
    """
    Evaluate the adversary's generating function at xi for a probe with generating function probe_pgf.
    """

    return willie_pgf(probe_pgf, scenario).eval(xi)


def willie_argument(scenario, xi):
    """
    Get the pair (x, μ) with P_S(ξ) = μ^M · P_W(x): x = 1 − (1−ξ)/((1−η) − ηN_B(1−ξ)) and μ = 1 + ηN_B(1−x).
    """

    eta, n_b = scenario.eta, scenario.n_b
    denominator = (1 - eta) - eta * n_b * (1 - xi)

    if denominator <= 0:
        raise ValueError("The argument {} cannot be mapped onto the adversary's generating function".format(xi))

    argument = 1 - (1 - xi) / denominator

    return argument, 1 + eta * n_b * (1 - argument)


def probe_pgf_from_willie(willie_generating_function, scenario, xi):
    """
    Evaluate the probe's generating function at xi from the adversary's generating function, inverting the thermal
    loss transform of willie_pgf.
    """

    argument, multiplier = willie_argument(scenario, xi)

    return math.exp(scenario.m_modes * math.log(multiplier)) * willie_generating_function.eval(argument)


def factorial_mgf_relations(pgf):
    """
    Get the falling-factorial generating function F(ξ) = P(1+ξ) and the rising-factorial generating function
    R(ξ) = (1−ξ)^(−M) · P(1/(1−ξ)) of a photon-number generating function.
    """

    def falling(xi):
        return pgf.eval(1 + xi)

    def rising(xi):
        if xi >= 1:
            raise ValueError("The rising-factorial generating function needs ξ < 1, got {}".format(xi))

        return math.exp(-pgf.m_modes * math.log1p(-xi)) * pgf.eval(1 / (1 - xi))

    rising_radius = 1 - 1 / pgf.domain_radius if pgf.domain_radius > 1 else 0.0

    # Every ξ < 0 maps 1/(1−ξ) into (0, 1), and 1 + ξ stays inside the negative radius down to −1 − radius.
    return (Pgf(falling, pgf.domain_radius - 1, pgf.m_modes, negative_radius=1 + pgf.negative_radius),
            Pgf(rising, rising_radius, pgf.m_modes, negative_radius=math.inf))


def pgf_mean(pgf, step=1e-5):
    """
    Get the mean photon number as the central-difference slope of the generating function at ξ = 1.
    """

    return (pgf.eval(1 + step) - pgf.eval(1 - step)) / (2 * step)


def thermal_pgf(n_mean, m_modes):
    """
    Get the closed-form generating function [1 + N(1−ξ)]^(−M) of M thermal modes with mean N each.
    """

    if n_mean < 0:
        raise ValueError("The thermal mean photon number has to be non-negative, got {}".format(n_mean))

    def evaluate(xi):
        base = 1 + n_mean * (1 - xi)

        if base <= 0:
            raise ValueError("The argument {} lies outside the convergence radius of the thermal generating "
                             "function".format(xi))

        return math.exp(-m_modes * math.log(base))

    radius = (n_mean + 1) / n_mean if n_mean > 0 else math.inf

    return Pgf(evaluate, radius, m_modes)
