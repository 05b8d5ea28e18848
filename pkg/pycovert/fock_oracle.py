"""
Truncated Fock-space representation of the states Alice receives, used as an independent check of the phase-space
Chernoff quantities. Thermal loss channels are simulated exactly as a quantum-limited amplifier after pure loss, both
with their Fock-basis Kraus operators.
"""

import math
import logging
import functools

import numpy as np

from pycovert.numerics import log_binomial, log_gamma
from pycovert.gaussian import GaussianState, VACUUM_VARIANCE, tmsv_state

# Upper limit for the mass outside a truncated density matrix.
MAXIMUM_TAIL_MASS = 1e-10
# Tail reached by fock_from_channel when it chooses the cutoff.
TARGET_TAIL_MASS = 1e-12
# Eigenvalues below this threshold are treated as round-off and set to zero.
EIGENVALUE_CLAMP = 1e-14
# Upper limit for the bytes of one density matrix during cutoff growth.
DEFAULT_MEMORY_BUDGET = 2 ** 28


class FockDensity:
    """
    Store a density matrix of n_modes modes, each truncated to the photon numbers 0..cutoff−1. The matrix is indexed in
    row-major order of the mode occupations, mode 0 first. tail_mass = 1 − trace is the mass lost by the truncation.
    """

    def __init__(self, matrix, cutoff, n_modes=1):
        matrix = np.array(matrix, dtype=complex)
        dimension = cutoff ** n_modes

        if matrix.shape != (dimension, dimension):
            raise ValueError("A density matrix of shape {} does not fit cutoff {} with {} modes".format(
                matrix.shape, cutoff, n_modes))

        if np.max(np.abs(matrix - matrix.conj().T)) > 1e-12:
            raise ValueError("The density matrix is not Hermitian")

        tail_mass = 1.0 - float(np.trace(matrix).real)

        if not -1e-12 <= tail_mass < MAXIMUM_TAIL_MASS:
            raise ValueError("The tail mass {} of the truncated density matrix is not below {}, increase the "
                             "cutoff".format(tail_mass, MAXIMUM_TAIL_MASS))

        matrix.setflags(write=False)
        self.matrix = matrix
        self.cutoff = int(cutoff)
        self.n_modes = int(n_modes)
        self.tail_mass = max(tail_mass, 0.0)

    @functools.cached_property
    def spectrum(self):
        """
        Get the eigenvalues, clamped below at zero, and the eigenvectors of the density matrix.
        """

        eigenvalues, eigenvectors = np.linalg.eigh(self.matrix)

        if np.min(eigenvalues) < -1e-12:
            logging.warning("Truncated density matrix with eigenvalue {} below −1e-12".format(np.min(eigenvalues)),
                            extra={"flag": "negative_fock_eigenvalue"})

        eigenvalues = np.where(eigenvalues < EIGENVALUE_CLAMP, 0.0, eigenvalues)

        return eigenvalues, eigenvectors

    def tensor(self):
        """
        Get the matrix as tensor with the ket indices of all modes followed by the bra indices.
        """

        return self.matrix.reshape((self.cutoff,) * (2 * self.n_modes))

    def reduced(self, mode):
        """
        Get the density matrix of one mode with every other mode traced out.
        """

        tensor = self.tensor()

        for traced_mode in reversed(range(self.n_modes)):
            if traced_mode != mode:
                tensor = np.trace(tensor, axis1=traced_mode, axis2=traced_mode + tensor.ndim // 2)

        return tensor

    def mean_photon_number(self, mode=0):
        diagonal = np.diag(self.reduced(mode)).real

        return float(np.dot(np.arange(self.cutoff), diagonal))

    def annihilation_expectation(self, mode=0):
        """
        Get ⟨a⟩ = Σ √n·ρ_(n, n−1) of one mode.
        """

        reduced = self.reduced(mode)
        photon_numbers = np.arange(1, self.cutoff)

        return complex(np.sum(np.sqrt(photon_numbers) * reduced[photon_numbers, photon_numbers - 1]))

    def __repr__(self):
        return "FockDensity(cutoff={}, n_modes={}, tail_mass={})".format(self.cutoff, self.n_modes, self.tail_mass)


def _log_power(base, exponents):
    # exponents·ln(base) with 0·ln(0) = 0.
    exponents = np.asarray(exponents, dtype=float)

    if base > 0:
        return exponents * math.log(base)

    return np.where(exponents == 0, 0.0, -np.inf)


def pure_loss_kraus(transmittance, cutoff):
    """
    Get the Kraus operators A_k = Σ_n √C(n, k)·τ^((n−k)/2)·(1−τ)^(k/2)·|n−k⟩⟨n| of pure loss with transmittance τ on
    the photon numbers 0..cutoff−1. Pure loss never raises the photon number, so the set is complete on this space.
    """

    photon_numbers = np.arange(cutoff, dtype=float)
    operators = []

    for loss_count in range(cutoff):
        source = photon_numbers[loss_count:]
        log_amplitudes = 0.5 * (log_binomial(source, loss_count) + _log_power(transmittance, source - loss_count)
                                + _log_power(1 - transmittance, loss_count))
        operator = np.zeros((cutoff, cutoff))
        operator[np.arange(cutoff - loss_count), np.arange(loss_count, cutoff)] = np.exp(log_amplitudes)

        if np.any(operator):
            operators.append(operator)

    return operators


def amplifier_kraus(gain, cutoff):
    """
    Get the Kraus operators B_k = G^(−1/2)·Σ_n √C(n+k, n)·(1−1/G)^(k/2)·G^(−n/2)·|n+k⟩⟨n| of the quantum-limited
    amplifier with gain G ≥ 1, truncated to the photon numbers 0..cutoff−1. The mass pushed beyond the cutoff is lost.
    """

    if gain < 1:
        raise ValueError("The amplifier gain has to be at least 1, got {}".format(gain))

    if gain == 1:
        return [np.eye(cutoff)]

    operators = []

    for gain_count in range(cutoff):
        source = np.arange(cutoff - gain_count, dtype=float)
        log_amplitudes = 0.5 * (log_binomial(source + gain_count, source) + gain_count * math.log1p(-1 / gain)
                                - (source + 1) * math.log(gain))
        operator = np.zeros((cutoff, cutoff))
        operator[np.arange(gain_count, cutoff), np.arange(cutoff - gain_count)] = np.exp(log_amplitudes)
        operators.append(operator)

    return operators


def _apply_kraus(tensor, operators, mode, n_modes):
    """
    Apply ρ → Σ K ρ K† on the ket axis mode and the bra axis n_modes + mode of a density tensor. Loss and
    amplifier operators have a single non-zero diagonal, so each term is a weighted shift of the tensor.
    """

    moved = np.moveaxis(np.asarray(tensor, dtype=complex), [mode, n_modes + mode], [0, 1])
    result = np.zeros_like(moved)
    trailing_shape = (1,) * (moved.ndim - 2)

    for operator in operators:
        rows, columns = np.nonzero(operator)

        if rows.size == 0:
            continue

        if np.unique(columns - rows).size == 1:
            values = operator[rows, columns]
            weights = (values[:, None] * np.conj(values)[None, :]).reshape((rows.size, rows.size) + trailing_shape)
            result[rows[:, None], rows[None, :]] += weights * moved[columns[:, None], columns[None, :]]

        else:
            transformed = np.tensordot(operator, moved, axes=([1], [0]))
            transformed = np.tensordot(operator.conj(), transformed, axes=([1], [1]))
            result += np.swapaxes(transformed, 0, 1)

    return np.moveaxis(result, [0, 1], [mode, n_modes + mode])


def apply_thermal_loss(density, mode, kappa, n_env):
    """
    Apply the thermal loss channel L_(κ, N) to one mode as amplifier of gain G = (1−κ)N + 1 after pure loss with
    transmittance κ/G.
    """

    gain = (1 - kappa) * n_env + 1
    tensor = density.tensor()
    tensor = _apply_kraus(tensor, pure_loss_kraus(kappa / gain, density.cutoff), mode, density.n_modes)
    tensor = _apply_kraus(tensor, amplifier_kraus(gain, density.cutoff), mode, density.n_modes)
    dimension = density.cutoff ** density.n_modes
    matrix = tensor.reshape(dimension, dimension)

    return FockDensity((matrix + matrix.conj().T) / 2, density.cutoff, density.n_modes)


def _coherent_amplitudes(alpha, cutoff):
    photon_numbers = np.arange(cutoff, dtype=float)
    amplitudes = np.zeros(cutoff, dtype=complex)
    amplitudes[0] = math.exp(-abs(alpha) ** 2 / 2)

    if alpha != 0:
        log_moduli = (-abs(alpha) ** 2 / 2 + photon_numbers * math.log(abs(alpha))
                      - 0.5 * log_gamma(photon_numbers + 1))
        amplitudes = np.exp(log_moduli) * np.exp(1j * photon_numbers * np.angle(alpha))

    return amplitudes


def fock_coherent(alpha, cutoff):
    """
    Get the truncated coherent state |α⟩⟨α|.
    """

    amplitudes = _coherent_amplitudes(complex(alpha), cutoff)

    return FockDensity(np.outer(amplitudes, amplitudes.conj()), cutoff)


def fock_thermal(n_mean, cutoff):
    """
    Get the truncated thermal state with the geometric photon-number distribution N^n/(N+1)^(n+1).
    """

    photon_numbers = np.arange(cutoff, dtype=float)
    probabilities = np.exp(_log_power(n_mean, photon_numbers) - (photon_numbers + 1) * math.log1p(n_mean))

    return FockDensity(np.diag(probabilities), cutoff)


def fock_tmsv(n_s, cutoff):
    """
    Get the truncated two-mode squeezed vacuum Σ_n c_n|n⟩|n⟩ with c_n² = N_S^n/(N_S+1)^(n+1), signal mode first.
    """

    photon_numbers = np.arange(cutoff, dtype=float)
    coefficients = np.exp(0.5 * (_log_power(n_s, photon_numbers) - (photon_numbers + 1) * math.log1p(n_s)))
    state = np.zeros((cutoff, cutoff))
    state[np.arange(cutoff), np.arange(cutoff)] = coefficients
    state = state.ravel()

    return FockDensity(np.outer(state, state), cutoff, n_modes=2)


def fock_displaced_thermal(alpha, n_mean, cutoff):
    """
    Get the displaced thermal state with amplitude α and thermal photon number N, produced by the amplifier of gain
    N + 1 acting on the coherent state |α/√(N+1)⟩.
    """

    gain = n_mean + 1
    seed = fock_coherent(complex(alpha) / math.sqrt(gain), cutoff)
    tensor = _apply_kraus(seed.tensor(), amplifier_kraus(gain, cutoff), 0, 1)

    return FockDensity((tensor + tensor.conj().T) / 2, cutoff)


def probe_kind(probe):
    """
    Classify a Gaussian probe as ("tmsv", N_S) or ("coherent", α). Other states are not supported by the oracle.
    """

    if not isinstance(probe, GaussianState):
        raise ValueError("Unsupported probe {}, a Gaussian state is required".format(probe))

    if probe.n_modes == 2 and np.allclose(probe.mean, 0):
        n_s = probe.mean_photon_number(0)

        if np.allclose(probe.covariance, tmsv_state(n_s).covariance, atol=1e-10):
            return "tmsv", n_s

    if probe.n_modes == 1 and np.allclose(probe.covariance, VACUUM_VARIANCE * np.eye(2), atol=1e-12):
        return "coherent", complex(probe.mean[0], probe.mean[1]) / math.sqrt(2)

    raise ValueError("Unsupported probe {}, a TMSV state or a coherent state is required".format(probe))


def _start_cutoff(probe_energy, n_b):
    # The geometric tail of brightness N falls below 1e-12 after about 28·(N+1) photons.
    return max(16, int(math.ceil(28 * (probe_energy + n_b + 1))))


def fock_from_channel(probe, hypothesis, scenario, cutoff=None, memory_budget=DEFAULT_MEMORY_BUDGET):
    """
    Get the truncated density of the state Alice receives under hypothesis 0 or 1: the signal mode passes the thermal
    loss channel with transmittance η (hypothesis 1) or 0 (hypothesis 0) and background N_B. Without an explicit cutoff
    the cutoff grows until the tail mass is below 1e-12. A ValueError reports growth beyond the memory budget.
    """

    if hypothesis not in (0, 1):
        raise ValueError("The hypothesis has to be 0 or 1, got {}".format(hypothesis))

    kind, parameter = probe_kind(probe)
    n_modes = 2 if kind == "tmsv" else 1
    transmittance = scenario.eta if hypothesis == 1 else 0.0
    probe_energy = parameter if kind == "tmsv" else abs(parameter) ** 2
    current_cutoff = cutoff if cutoff is not None else _start_cutoff(probe_energy, scenario.n_b)

    while True:
        # A complex matrix of dimension cutoff^n_modes plus the work buffers of the Kraus sums.
        required_bytes = 3 * 16 * current_cutoff ** (2 * n_modes)

        if required_bytes > memory_budget:
            logging.warning("The Fock cutoff {} exceeds the memory budget of {} bytes".format(current_cutoff,
                                                                                          memory_budget),
                            extra={"flag": "fock_memory_budget", "grid_point": scenario.to_dict()})
            raise ValueError("The Fock cutoff {} needed for {} modes exceeds the memory budget of {} "
                             "bytes".format(current_cutoff, n_modes, memory_budget))

        if kind == "tmsv":
            seed = fock_tmsv(parameter, current_cutoff)

        else:
            seed = fock_coherent(parameter, current_cutoff)

        try:
            density = apply_thermal_loss(seed, 0, transmittance, scenario.n_b)

        except ValueError:
            if cutoff is not None:
                raise

            density = None

        if cutoff is not None or (density is not None and density.tail_mass < TARGET_TAIL_MASS):
            return density

        current_cutoff = int(math.ceil(1.5 * current_cutoff))
        logging.debug("Increasing the Fock cutoff to {}".format(current_cutoff))


def _check_same_space(rho0, rho1):
    if rho0.matrix.shape != rho1.matrix.shape or rho0.n_modes != rho1.n_modes:
        raise ValueError("Both densities need the same truncated space, got {} and {}".format(rho0, rho1))


def q_s_fock_oracle(rho0, rho1, s):
    """
    Calculate Q_s = Tr ρ₀^s ρ₁^(1−s) from the eigendecompositions of both densities. s may be a scalar or an array.
    At s = 0 and s = 1 the zero power of a density is the projector on its support.
    """

    _check_same_space(rho0, rho1)
    values0, vectors0 = rho0.spectrum
    values1, vectors1 = rho1.spectrum
    overlaps = np.abs(vectors0.conj().T @ vectors1) ** 2

    def evaluate(exponent):
        if not 0 <= exponent <= 1:
            raise ValueError("s has to lie in [0, 1], got {}".format(exponent))

        with np.errstate(divide="ignore"):
            powers0 = np.where(values0 > 0, values0 ** exponent, 0.0)
            powers1 = np.where(values1 > 0, values1 ** (1 - exponent), 0.0)

        return float(powers0 @ overlaps @ powers1)

    if np.ndim(s) == 0:
        return evaluate(float(s))

    return np.array([evaluate(float(exponent)) for exponent in np.ravel(s)]).reshape(np.shape(s))


def _square_root(density):
    values, vectors = density.spectrum

    return (vectors * np.sqrt(values)) @ vectors.conj().T


def fidelity_oracle(rho0, rho1):
    """
    Calculate the Uhlmann fidelity Tr √(√ρ₀·ρ₁·√ρ₀).
    """

    _check_same_space(rho0, rho1)
    root = _square_root(rho0)
    product = root @ rho1.matrix @ root
    eigenvalues = np.linalg.eigvalsh((product + product.conj().T) / 2)

    return float(np.sum(np.sqrt(np.clip(eigenvalues, 0, None))))


def trace_norm_oracle(rho0, rho1, priors=(0.5, 0.5)):
    """
    Calculate the trace norm ‖λ₀ρ₀ − λ₁ρ₁‖₁ of the weighted difference of two densities.
    """

    _check_same_space(rho0, rho1)
    prior0, prior1 = priors
    difference = prior0 * rho0.matrix - prior1 * rho1.matrix

    return float(np.sum(np.abs(np.linalg.eigvalsh(difference))))


def helstrom_error_oracle(rho0, rho1, priors=(0.5, 0.5)):
    """
    Calculate the minimum error probability (1 − ‖λ₀ρ₀ − λ₁ρ₁‖₁)/2 of discriminating two densities.
    """

    return (1 - trace_norm_oracle(rho0, rho1, priors)) / 2
