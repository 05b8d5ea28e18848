"""
Gaussian states in the Wigner convention with vacuum variance 1/2 and quadrature order (q_1, ..., q_n, p_1, ..., p_n).
The Chernoff quantities are evaluated in the vacuum-variance-1 convention of the symplectic Chernoff formula, so every
conversion multiplies covariances by 2 and means by √2.
"""

import math
import logging

import numpy as np
import scipy.linalg

from pycovert.numerics import SolverConfig, SolverError, minimize_scalar

VACUUM_VARIANCE = 0.5

# Boundary values of s are approached through these arguments.
S_BOUNDARY_OFFSET = 1e-6


def symplectic_form(n_modes):
    """
    Get the standard symplectic form Ω = [[0, I], [−I, 0]] for the quadrature order (q_1..q_n, p_1..p_n).
    """

    identity = np.eye(n_modes)
    zeros = np.zeros((n_modes, n_modes))

    return np.block([[zeros, identity], [-identity, zeros]])


def symplectic_eigenvalues(covariance):
    """
    Calculate the symplectic eigenvalues of a covariance matrix as the moduli of the eigenvalues of iΩV, which come in
    ± pairs. The result is sorted in ascending order and has one entry per mode.
    """

    covariance = np.asarray(covariance, dtype=float)
    n_modes = covariance.shape[0] // 2
    eigenvalues = np.linalg.eigvals(1j * symplectic_form(n_modes) @ covariance)

    return np.sort(np.abs(eigenvalues))[::2]


def williamson_decomposition(covariance):
    """
    Decompose a positive definite covariance matrix as V = S·diag(ν, ν)·Sᵀ with a symplectic S. The normal form comes
    from the real Schur decomposition of the antisymmetric matrix V^(−1/2)·Ω·V^(−1/2), whose 2×2 blocks carry ±1/ν.
    Returns the symplectic eigenvalues ν (one per mode) and S.
    """

    covariance = np.asarray(covariance, dtype=float)
    n_modes = covariance.shape[0] // 2

    eigenvalues, eigenvectors = np.linalg.eigh(covariance)

    if np.min(eigenvalues) <= 0:
        raise ValueError("The covariance matrix is not positive definite, smallest eigenvalue "
                         "{}".format(np.min(eigenvalues)))

    square_root = eigenvectors @ np.diag(np.sqrt(eigenvalues)) @ eigenvectors.T
    inverse_square_root = eigenvectors @ np.diag(1 / np.sqrt(eigenvalues)) @ eigenvectors.T
    generator = inverse_square_root @ symplectic_form(n_modes) @ inverse_square_root

    schur_form, schur_vectors = scipy.linalg.schur(generator, output="real")

    # Orient every block as [[0, a], [−a, 0]] with a > 0.
    for block in range(n_modes):
        if schur_form[2 * block, 2 * block + 1] < 0:
            schur_vectors[:, [2 * block, 2 * block + 1]] = schur_vectors[:, [2 * block + 1, 2 * block]]
            schur_form[[2 * block, 2 * block + 1], :] = schur_form[[2 * block + 1, 2 * block], :]
            schur_form[:, [2 * block, 2 * block + 1]] = schur_form[:, [2 * block + 1, 2 * block]]

    block_values = np.array([schur_form[2 * block, 2 * block + 1] for block in range(n_modes)])
    symplectic_values = 1 / block_values

    # Pair order (q_1, p_1, q_2, p_2, ...) to quadrature order (q_1, q_2, ..., p_1, p_2, ...).
    permutation = np.concatenate([np.arange(0, 2 * n_modes, 2), np.arange(1, 2 * n_modes, 2)])
    ordered_vectors = schur_vectors[:, permutation]

    normal_form_scaling = np.diag(1 / np.sqrt(np.concatenate([symplectic_values, symplectic_values])))
    symplectic_matrix = square_root @ ordered_vectors @ normal_form_scaling

    return symplectic_values, symplectic_matrix


class GaussianState:
    """
    Create an immutable n-mode Gaussian state with mean vector and covariance matrix (vacuum variance 1/2). The
    constructor checks symmetry and the uncertainty principle through the symplectic spectrum.
    """

    def __init__(self, mean, covariance):
        mean = np.array(mean, dtype=float)
        covariance = np.array(covariance, dtype=float)

        if covariance.ndim != 2 or covariance.shape[0] != covariance.shape[1] or covariance.shape[0] % 2 != 0:
            raise ValueError("A covariance matrix of shape 2n×2n is required, got {}".format(covariance.shape))

        if mean.shape != (covariance.shape[0],):
            raise ValueError("The mean vector of shape {} does not fit the covariance matrix of shape "
                             "{}".format(mean.shape, covariance.shape))

        if np.max(np.abs(covariance - covariance.T)) > 1e-12:
            raise ValueError("The covariance matrix is not symmetric")

        smallest_value = float(np.min(symplectic_eigenvalues(covariance)))

        if smallest_value < VACUUM_VARIANCE - 1e-10:
            raise ValueError("The covariance matrix violates the uncertainty principle, smallest symplectic "
                             "eigenvalue {} < 1/2".format(smallest_value))

        mean.setflags(write=False)
        covariance.setflags(write=False)
        self.mean = mean
        self.covariance = covariance

    @property
    def n_modes(self):
        return self.covariance.shape[0] // 2

    def symplectic_spectrum(self):
        return symplectic_eigenvalues(self.covariance)

    def mean_photon_number(self, mode=0):
        """
        Get the mean photon number of one mode from its quadrature moments.
        """

        q_index, p_index = mode, mode + self.n_modes
        variance_sum = self.covariance[q_index, q_index] + self.covariance[p_index, p_index]
        displacement = self.mean[q_index] ** 2 + self.mean[p_index] ** 2

        return float((variance_sum + displacement) / 2 - VACUUM_VARIANCE)

    def __repr__(self):
        return "GaussianState(n_modes={}, mean={}, covariance={})".format(self.n_modes, self.mean.tolist(),
                                                                          self.covariance.tolist())


class ScenarioParams:
    """
    Describe the physical scenario of covert target detection: reflectivity eta, background brightness n_b, mode
    count m_modes, covertness epsilon and the priors of the adversary. The object is immutable, use replace() for a
    modified copy.
    """

    __slots__ = ("eta", "n_b", "m_modes", "epsilon", "prior0", "prior1")

    def __init__(self, eta, n_b, m_modes=1, epsilon=0.0, prior0=0.5, prior1=None):
        if prior1 is None:
            prior1 = 1.0 - prior0

        if not 0 <= eta <= 1:
            raise ValueError("The reflectivity eta has to lie in [0, 1], got {}".format(eta))

        if n_b < 0:
            raise ValueError("The background brightness n_b has to be non-negative, got {}".format(n_b))

        if int(m_modes) != m_modes or m_modes < 0:
            raise ValueError("The mode count m_modes has to be a non-negative integer, got {}".format(m_modes))

        if not 0 <= epsilon <= 0.5:
            raise ValueError("The covertness epsilon has to lie in [0, 1/2], got {}".format(epsilon))

        if not (0 < prior0 < 1 and 0 < prior1 < 1) or abs(prior0 + prior1 - 1) > 1e-12:
            raise ValueError("The priors have to lie in (0, 1) and sum to 1, got {} and {}".format(prior0, prior1))

        object.__setattr__(self, "eta", float(eta))
        object.__setattr__(self, "n_b", float(n_b))
        object.__setattr__(self, "m_modes", int(m_modes))
        object.__setattr__(self, "epsilon", float(epsilon))
        object.__setattr__(self, "prior0", float(prior0))
        object.__setattr__(self, "prior1", float(prior1))

    def __setattr__(self, key, value):
        raise AttributeError("ScenarioParams is immutable, use replace()")

    def replace(self, **changes):
        parameters = self.to_dict()
        parameters.update(changes)

        # A new prior0 without prior1 keeps the priors normalized.
        if "prior0" in changes and "prior1" not in changes:
            parameters["prior1"] = None

        return ScenarioParams(**parameters)

    def to_dict(self):
        return {key: getattr(self, key) for key in self.__slots__}

    def __eq__(self, other):
        return isinstance(other, ScenarioParams) and self.to_dict() == other.to_dict()

    def __hash__(self):
        return hash(tuple(self.to_dict().items()))

    def __repr__(self):
        return "ScenarioParams({})".format(", ".join("{}={}".format(key, value)
                                                     for key, value in self.to_dict().items()))


def thermal_state(n_mean, n_modes=1):
    """
    Get the product of n_modes thermal states with mean photon number n_mean each.
    """

    if n_mean < 0:
        raise ValueError("The mean photon number of a thermal state has to be non-negative, got {}".format(n_mean))

    return GaussianState(np.zeros(2 * n_modes), (n_mean + VACUUM_VARIANCE) * np.eye(2 * n_modes))


def coherent_state(alpha):
    """
    Get the single-mode coherent state |α⟩, with mean (√2·Re α, √2·Im α).
    """

    alpha = complex(alpha)

    return GaussianState([math.sqrt(2) * alpha.real, math.sqrt(2) * alpha.imag], VACUUM_VARIANCE * np.eye(2))


def tmsv_state(n_s):
    """
    Get the two-mode squeezed vacuum with signal energy n_s. Mode 0 is the signal, mode 1 the idler.
    """

    if n_s < 0:
        raise ValueError("The signal energy of a TMSV state has to be non-negative, got {}".format(n_s))

    diagonal = n_s + VACUUM_VARIANCE
    correlation = math.sqrt(n_s * (n_s + 1))
    q_block = np.array([[diagonal, correlation], [correlation, diagonal]])
    p_block = np.array([[diagonal, -correlation], [-correlation, diagonal]])

    return GaussianState(np.zeros(4), scipy.linalg.block_diag(q_block, p_block))


def thermal_loss_channel(state, mode, kappa, n_env):
    """
    Apply the thermal loss channel with transmittance kappa and environment brightness n_env to one mode of a state:
    V → X·V·X + Y and mean → X·mean, with X = √κ and Y = (1−κ)(n_env + 1/2) on the quadratures of that mode.
    """

    if not 0 <= kappa <= 1:
        raise ValueError("The transmittance has to lie in [0, 1], got {}".format(kappa))

    scaling = np.ones(2 * state.n_modes)
    scaling[[mode, mode + state.n_modes]] = math.sqrt(kappa)
    added_noise = np.zeros(2 * state.n_modes)
    added_noise[[mode, mode + state.n_modes]] = (1 - kappa) * (n_env + VACUUM_VARIANCE)

    covariance = scaling[:, None] * state.covariance * scaling[None, :] + np.diag(added_noise)

    return GaussianState(scaling * state.mean, covariance)


def alice_received(probe, hypothesis, scenario):
    """
    Get the state Alice holds after probing: the signal mode (mode 0) of a TMSV probe or a single-mode coherent probe
    passes the thermal loss channel with transmittance eta under hypothesis 1 and 0 under hypothesis 0. An idler mode
    is kept untouched.
    """

    if not isinstance(probe, GaussianState) or probe.n_modes not in (1, 2):
        raise ValueError("Unsupported probe {}, a single-mode coherent state or a signal/idler pair is "
                         "required".format(probe))

    if hypothesis not in (0, 1):
        raise ValueError("The hypothesis has to be 0 or 1, got {}".format(hypothesis))

    transmittance = scenario.eta if hypothesis == 1 else 0.0

    return thermal_loss_channel(probe, 0, transmittance, scenario.n_b)


def _power_ratio(values, exponent):
    # ((x−1)/(x+1))^p with x = 1 giving 0.
    with np.errstate(divide="ignore"):
        log_ratio = np.log(values - 1) - np.log(values + 1)

    return np.exp(exponent * log_ratio), log_ratio


def log_g_function(values, exponent):
    """
    Calculate ln G_p(x) with G_p(x) = 2^p / ((x+1)^p − (x−1)^p) in a cancellation-free form.
    """

    ratio, log_ratio = _power_ratio(values, exponent)
    # 1 − ratio = −expm1(p·ln((x−1)/(x+1))).
    one_minus_ratio = np.where(np.isfinite(log_ratio), -np.expm1(exponent * log_ratio), 1.0)

    return exponent * math.log(2) - exponent * np.log(values + 1) - np.log(one_minus_ratio)


def lambda_function(values, exponent):
    """
    Calculate Λ_p(x) = ((x+1)^p + (x−1)^p) / ((x+1)^p − (x−1)^p).
    """

    ratio, log_ratio = _power_ratio(values, exponent)
    one_minus_ratio = np.where(np.isfinite(log_ratio), -np.expm1(exponent * log_ratio), 1.0)

    return (1 + ratio) / one_minus_ratio


class ChernoffPair:
    """
    Hold the Williamson decompositions of two Gaussian states with the same mode count, so Q_s = Tr ρ₀^s ρ₁^(1−s) can
    be evaluated for many s and many mean differences without decomposing again.
    """

    def __init__(self, rho0, rho1):
        if rho0.n_modes != rho1.n_modes:
            raise ValueError("Both states need the same mode count, got {} and {}".format(rho0.n_modes,
                                                                                         rho1.n_modes))

        self.n_modes = rho0.n_modes
        self.values0, self.symplectic0 = self.decompose(rho0)
        self.values1, self.symplectic1 = self.decompose(rho1)
        self.mean_difference = math.sqrt(2) * (rho0.mean - rho1.mean)

    @staticmethod
    def decompose(state):
        values, symplectic_matrix = williamson_decomposition(2 * state.covariance)

        if np.min(values) < 1 - 2e-10:
            raise ValueError("Invalid Gaussian state with symplectic eigenvalue {} < 1/2".format(np.min(values) / 2))

        # Round-off below the vacuum value would make the fractional powers complex.
        return np.maximum(values, 1.0), symplectic_matrix

    def components(self, s):
        """
        Get the logarithm of the displacement-free factor of Q_s and the matrix R_s, so that
        Q_s = exp(log_prefactor − dᵀ·R_s⁻¹·d / 2) for a mean difference d in the vacuum-variance-1 convention.
        """

        s = min(max(s, S_BOUNDARY_OFFSET), 1 - S_BOUNDARY_OFFSET)
        lambda0 = lambda_function(self.values0, s)
        lambda1 = lambda_function(self.values1, 1 - s)
        combined = (self.symplectic0 @ np.diag(np.concatenate([lambda0, lambda0])) @ self.symplectic0.T
                    + self.symplectic1 @ np.diag(np.concatenate([lambda1, lambda1])) @ self.symplectic1.T)

        sign, log_determinant = np.linalg.slogdet(combined)

        if sign <= 0:
            raise SolverError("Numerical failure in the Chernoff matrix at s={}".format(s))

        log_prefactor = (self.n_modes * math.log(2) + float(np.sum(log_g_function(self.values0, s)))
                         + float(np.sum(log_g_function(self.values1, 1 - s))) - log_determinant / 2)

        return log_prefactor, combined

    def log_q_s(self, s, mean_difference=None):
        if mean_difference is None:
            mean_difference = self.mean_difference

        log_prefactor, combined = self.components(s)
        quadratic_form = float(mean_difference @ np.linalg.solve(combined, mean_difference))

        return log_prefactor - quadratic_form / 2

    def q_s(self, s, mean_difference=None):
        return math.exp(self.log_q_s(s, mean_difference))


def q_s_gaussian(rho0, rho1, s):
    """
    Calculate Q_s = Tr ρ₀^s ρ₁^(1−s) for two Gaussian states with the symplectic Chernoff formula. Values of s at the
    boundary of [0, 1] are evaluated at a distance of 1e-6 from it.
    """

    return ChernoffPair(rho0, rho1).q_s(s)


def chernoff_exponent_per_mode(rho0, rho1, config=None):
    """
    Calculate the Chernoff exponent χ = −ln min_s Q_s and the minimizing s. The golden-section result is compared with
    s = 1/2, so the exponent is never below the Bhattacharyya value.
    """

    if config is None:
        config = SolverConfig(abs_tol=1e-9)

    pair = ChernoffPair(rho0, rho1)
    s_star, log_q_minimum, converged = minimize_scalar(pair.log_q_s, 0.0, 1.0, config)
    log_q_half = pair.log_q_s(0.5)

    if log_q_half < log_q_minimum:
        s_star, log_q_minimum = 0.5, log_q_half

    if not converged:
        logging.warning("The Chernoff minimization did not converge, using s={}".format(s_star),
                        extra={"flag": "chernoff_not_converged"})

    return max(0.0, -log_q_minimum), float(s_star)
