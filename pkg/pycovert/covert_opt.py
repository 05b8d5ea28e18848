"""
Constrained extremizations over the total photon-number distribution q seen by the adversary. Both problems keep the
Bhattacharyya overlap between q and the background distribution p at the covert threshold t and use the stationarity
conditions of the Lagrangian:

- probe energy limits: q_n ∝ p_n/(n − mult2)², with the pole mult2 below 0 (minimum) or beyond the support (maximum),
- minimal fidelity bound: q_n ∝ p_n/(K·x^n + mult2)² with K = ν^M·μ^M.

Normalization eliminates the renormalization constant, which leaves one monotone equation per problem. It is bracketed
and bisected, then polished together with mult1 by a two-dimensional Newton solve.
"""

import math
import logging

import numpy as np

from pycovert.bounds import covert_argument, covert_guard, covert_threshold, nu, thermal_log_weights
from pycovert.numerics import SolverConfig, SolverError, bisect_increasing, log_sum_exp, solve_2d
from pycovert.photon_stats import PhotonPmf, thermal_total_pmf

# Mass of the background distribution beyond the summation limit d.
SUPPORT_TAIL = 1e-15
# Bound on the first neglected stationarity term relative to the normalization sum.
NEGLECTED_TERM_BOUND = 1e-14
# The continuation starts at this covertness and steps down by one decade per step.
CONTINUATION_START_EPSILON = 0.4
# Distance of the lowest pole exponent below ln(p_boundary)/2, where q is a point mass at the boundary.
POLE_FLOOR_MARGIN = 50.0


class KktSolution:
    """
    Describe a stationary point of a covert extremization: the multipliers, the extremal distribution q_star, the
    objective value at q_star, the largest equation residual and the renormalization 𝒩 of the stationarity formula.
    attained is False where the extremum is only approached by distributions escaping to large photon numbers.
    pole_exponent is ln|mult2 − boundary| of the energy problem. It stays exact where mult2 itself rounds onto the
    boundary.
    """

    def __init__(self, mult1, mult2, q_star, objective, residual, renorm, converged, branch, threshold,
                 attained=True, vacuous=False, diagnostics=None, pole_exponent=None):
        self.mult1 = float(mult1)
        self.mult2 = float(mult2)
        self.q_star = q_star
        self.objective = float(objective)
        self.residual = float(residual)
        self.renorm = float(renorm)
        self.converged = bool(converged)
        self.branch = branch
        self.threshold = float(threshold)
        self.attained = bool(attained)
        self.vacuous = bool(vacuous)
        self.diagnostics = diagnostics
        self.pole_exponent = pole_exponent

    @property
    def flagged(self):
        return not self.converged or not self.attained or self.vacuous

    def __repr__(self):
        return ("KktSolution(branch={}, mult1={}, mult2={}, objective={}, residual={}, converged={}, "
                "attained={})".format(self.branch, self.mult1, self.mult2, self.objective, self.residual,
                                      self.converged, self.attained))


class EnergyLimits:
    """
    Hold the smallest and the largest per-mode probe energy compatible with ε-covertness, with the solutions behind
    them. Both solutions are None for ε = 0.
    """

    def __init__(self, ns_min, ns_max, min_solution=None, max_solution=None):
        self.ns_min = float(ns_min)
        self.ns_max = float(ns_max)
        self.min_solution = min_solution
        self.max_solution = max_solution

    @property
    def flagged(self):
        return any(solution is not None and solution.flagged for solution in (self.min_solution, self.max_solution))

    def __repr__(self):
        return "EnergyLimits(ns_min={}, ns_max={})".format(self.ns_min, self.ns_max)


def _background_support(scenario):
    """
    Get the photon numbers and the probabilities of the background distribution, cut at the smallest d whose
    neglected mass is below the support tail, as (photon numbers, probabilities, log probabilities).
    """

    background = thermal_total_pmf(scenario.n_b, scenario.m_modes)
    probabilities = background.probabilities()
    # Mass beyond every index, accumulated from the far end.
    tails = np.concatenate([np.cumsum(probabilities[::-1])[::-1][1:], [0.0]])
    cutoff = int(np.argmax(tails < SUPPORT_TAIL))
    log_probabilities = background.log_weights[:cutoff + 1] - log_sum_exp(background.log_weights[:cutoff + 1])

    return np.arange(cutoff + 1, dtype=float), np.exp(log_probabilities), log_probabilities


def _pole(branch, z, cutoff):
    # The pole mult2 lies at −e^z on the minimum branch and at d + e^z on the maximum branch.
    return -math.exp(z) if branch == "min" else cutoff + math.exp(z)


def _log_pole_distances(branch, z, photon_numbers):
    """
    Get ln|n − mult2| for the pole of the branch at exponent z. The distance to the boundary point (0 or d) is e^z
    exactly, also where mult2 itself rounds onto the boundary.
    """

    offsets = photon_numbers if branch == "min" else photon_numbers[-1] - photon_numbers

    with np.errstate(divide="ignore"):
        return np.logaddexp(np.log(offsets), z)


def _pole_floor(branch, log_probabilities):
    # Below this exponent q is a point mass at the boundary to double precision.
    log_boundary = log_probabilities[0] if branch == "min" else log_probabilities[-1]

    return min(log_boundary / 2, 0.0) - POLE_FLOOR_MARGIN


def _overlap_ratio(log_probabilities, log_weights):
    """
    Get Σ p·w/√(Σ p·w²), the covertness overlap of the normalized distribution q ∝ p·w², from ln p and ln w.
    """

    return math.exp(log_sum_exp(log_probabilities + log_weights)
                    - log_sum_exp(log_probabilities + 2 * log_weights) / 2)


def _log_scale_start(branch, z, photon_numbers, log_probabilities):
    # ln mult1 that normalizes q for the pole exponent z.
    log_distances = _log_pole_distances(branch, z, photon_numbers)

    return math.log(2) - log_sum_exp(log_probabilities - 2 * log_distances) / 2


def _continuation_epsilons(epsilon):
    if epsilon >= CONTINUATION_START_EPSILON:
        return [epsilon]

    step_count = int(math.ceil(math.log10(CONTINUATION_START_EPSILON / epsilon)))

    return [CONTINUATION_START_EPSILON * (epsilon / CONTINUATION_START_EPSILON) ** (step / step_count)
            for step in range(step_count + 1)]


def _continuation_path(scenario, branch, photon_numbers, log_probabilities, config):
    """
    Track the pole exponent from ε = 0.4 down to the target ε. A smaller ε moves the pole further away, so every root is
    the lower bracket of the next step. The first bracket starts at the pole floor, where q is a point mass at the
    boundary. Steps whose threshold is reached at the floor are skipped. Returns (z, diagnostics of the final step,
    total bracket expansions).
    """

    probabilities = np.exp(log_probabilities)
    mean = float(np.dot(probabilities, photon_numbers))
    spread = math.sqrt(max(float(np.dot(probabilities, (photon_numbers - mean) ** 2)), 1.0))
    floor = _pole_floor(branch, log_probabilities)

    def ratio(z):
        return _overlap_ratio(log_probabilities, -_log_pole_distances(branch, z, photon_numbers))

    closest_ratio = ratio(floor)
    z = floor
    upper = math.log(spread) + 1
    total_expansions = 0
    diagnostics = None

    for epsilon in _continuation_epsilons(scenario.epsilon):
        target = covert_threshold(scenario.replace(epsilon=epsilon))

        if target <= closest_ratio and epsilon != scenario.epsilon:
            continue

        z, diagnostics = bisect_increasing(ratio, target, z, max(z + 2, upper), limits=(floor, 700.0),
                                           config=config)
        total_expansions += diagnostics.bracket_expansions
        logging.debug("Continuation step of the {} branch at eps={}: pole exponent {} after {} bisection "
                      "steps".format(branch, epsilon, z, diagnostics.iterations))

    return z, diagnostics, total_expansions


def continuation_initializer(scenario, branch, config=None):
    """
    Get start values (mult1, mult2) of the probe energy problem on the "min" or "max" branch by homotopy from ε = 0.4,
    where the constraint is loose, down to the target ε in decade steps.
    """

    if branch not in ("min", "max"):
        raise ValueError("The branch has to be min or max, got {}".format(branch))

    if config is None:
        config = SolverConfig()

    photon_numbers, _, log_probabilities = _background_support(scenario)
    z, _, _ = _continuation_path(scenario, branch, photon_numbers, log_probabilities, config)

    return (math.exp(_log_scale_start(branch, z, photon_numbers, log_probabilities)),
            _pole(branch, z, photon_numbers[-1]))


def _energy_branch(scenario, branch, config):
    """
    Solve the stationarity system of one branch in the coordinates (ln mult1, z) with mult2 = −e^z or d + e^z. The
    vacuum weight of the minimum branch is p_0·e^(−2z), which stays representable for poles far below the resolution of
    mult2 itself.
    """

    photon_numbers, _, log_probabilities = _background_support(scenario)
    cutoff = photon_numbers[-1]
    threshold = covert_threshold(scenario)

    if branch == "min" and (threshold == 0 or math.log(threshold) <= log_probabilities[0] / 2):
        # The vacuum distribution already satisfies the overlap condition.
        logging.warning("The covertness constraint admits the vacuum distribution at {}".format(scenario),
                        extra={"flag": "vacuous_energy_constraint", "grid_point": scenario.to_dict()})

        return KktSolution(0.0, 0.0, PhotonPmf.point_mass(0), 0.0, 0.0, 1.0, True, branch, threshold,
                           vacuous=True)

    z, path_diagnostics, _ = _continuation_path(scenario, branch, photon_numbers, log_probabilities, config)
    start = (_log_scale_start(branch, z, photon_numbers, log_probabilities), z)
    log_threshold = math.log(threshold)

    def equations(point):
        log_scale, pole_exponent = point
        log_distances = _log_pole_distances(branch, pole_exponent, photon_numbers)

        # mult1²·Σ p/(n − mult2)²/4 − 1 and mult1·Σ p/|n − mult2|/2 − t, summed in the log domain.
        with np.errstate(over="ignore"):
            return (float(np.expm1(2 * log_scale - math.log(4)
                                   + log_sum_exp(log_probabilities - 2 * log_distances))),
                    threshold * float(np.expm1(log_scale - math.log(2)
                                               + log_sum_exp(log_probabilities - log_distances) - log_threshold)))

    (log_scale, z), diagnostics = solve_2d(equations, start, SolverConfig(abs_tol=1e-10, rel_tol=config.rel_tol,
                                                                          max_iter=config.max_iter,
                                                                          damping=config.damping))
    diagnostics.bracket_expansions = path_diagnostics.bracket_expansions

    log_raw = 2 * log_scale - math.log(4) + log_probabilities - 2 * _log_pole_distances(branch, z, photon_numbers)
    log_normalization = log_sum_exp(log_raw)
    q_star = PhotonPmf(log_raw - log_normalization)
    objective = float(np.dot(photon_numbers, q_star.probabilities()))
    residual = float(max(abs(value) for value in equations((log_scale, z))))
    mult2 = _pole(branch, z, cutoff)

    # First term beyond the summation limit, relative to the normalization sum.
    next_number = cutoff + 1
    log_next = float(thermal_log_weights([next_number], scenario.n_b, scenario.m_modes)[0])

    if branch == "min":
        log_distance = float(np.logaddexp(math.log(next_number), z))

    else:
        log_distance = math.log(-math.expm1(z)) if z < 0 else -math.inf

    neglected = math.exp(log_next + 2 * log_scale - math.log(4) - 2 * log_distance)

    if neglected > NEGLECTED_TERM_BOUND:
        logging.warning("The {} branch at {} neglects a stationarity term of {} beyond d={}".format(
            branch, scenario, neglected, int(cutoff)), extra={"flag": "support_truncation",
                                                              "grid_point": scenario.to_dict()})

    return KktSolution(math.exp(log_scale), mult2, q_star, objective, residual, math.exp(-log_normalization),
                       diagnostics.converged, branch, threshold, diagnostics=diagnostics, pole_exponent=z)


def probe_energy_from_willie(energy, scenario):
    """
    Map the adversary's mean total photon number E_W to the per-mode probe energy (E_W − M·η·N_B)/((1−η)·M).
    """

    return (energy - scenario.m_modes * scenario.eta * scenario.n_b) / ((1 - scenario.eta) * scenario.m_modes)


def energy_limits(scenario, config=None):
    """
    Calculate the smallest and the largest per-mode probe energy that keep the adversary's distribution ε-covert.
    At ε = 0 both limits are N_B. Probe energies are never negative, so the lower limit is clipped at 0.
    """

    if config is None:
        config = SolverConfig()

    if scenario.m_modes == 0:
        raise ValueError("Energy limits need at least one mode")

    if scenario.epsilon == 0:
        return EnergyLimits(scenario.n_b, scenario.n_b)

    if scenario.n_b == 0:
        raise ValueError("Energy limits need a non-zero background, got n_b=0")

    min_solution = _energy_branch(scenario, "min", config)
    ns_min = max(0.0, min(scenario.n_b, probe_energy_from_willie(min_solution.objective, scenario)))

    if covert_threshold(scenario) == 0:
        logging.warning("The covertness constraint is vacuous at {}, the probe energy is unbounded".format(scenario),
                        extra={"flag": "vacuous_energy_constraint", "grid_point": scenario.to_dict()})

        return EnergyLimits(ns_min, math.inf, min_solution, None)

    max_solution = _energy_branch(scenario, "max", config)
    ns_max = max(scenario.n_b, probe_energy_from_willie(max_solution.objective, scenario))

    for solution in (min_solution, max_solution):
        if not solution.converged:
            logging.warning("The {} branch of the energy limits did not converge at {}, residual {}".format(
                solution.branch, scenario, solution.residual), extra={"flag": "kkt_not_converged",
                                                                      "grid_point": scenario.to_dict()})

    return EnergyLimits(ns_min, ns_max, min_solution, max_solution)


def _fidelity_support(scenario, argument):
    """
    Get the photon numbers and the background probabilities on a support wide enough for the tilted sums with
    weights up to x^(−2n).
    """

    background = thermal_total_pmf(scenario.n_b, scenario.m_modes)
    cutoff = background.cutoff
    tilted_ratio = scenario.n_b / (scenario.n_b + 1) / argument ** 2

    if tilted_ratio < 1:
        # The x^(−2n)-tilted background is again negative binomial with brightness r/(1 − r).
        tilted = thermal_total_pmf(tilted_ratio / (1 - tilted_ratio), scenario.m_modes)
        cutoff = max(cutoff, tilted.cutoff)

    else:
        cutoff *= 2

    photon_numbers = np.arange(cutoff + 1, dtype=float)
    log_probabilities = thermal_log_weights(photon_numbers, scenario.n_b, scenario.m_modes)

    return photon_numbers, log_probabilities


def min_fidelity_numeric(scenario, config=None):
    """
    Minimize the fidelity bound ν^M·μ^M·Σ q_n x^n over ε-covert distributions q of the adversary's total photon number.
    With A = Σ p_n x^(−n) and B = Σ p_n x^(−2n), thresholds t ≤ A/√B are not attained: the infimum equals the analytic
    bound K·t²/A and the returned solution has attained set to False. A non-positive x raises a SolverError.
    """

    if config is None:
        config = SolverConfig()

    _, argument = covert_argument(scenario)

    if argument <= 0:
        raise SolverError("The fidelity minimization needs x > 0, got x={} at {}".format(argument, scenario))

    if not covert_guard(scenario, argument):
        logging.warning("The convergence condition is violated at {} (x={})".format(scenario, argument),
                        extra={"flag": "covert_guard_violated", "grid_point": scenario.to_dict()})

    n_b, eta, m_modes = scenario.n_b, scenario.eta, scenario.m_modes
    threshold = covert_threshold(scenario)
    log_mu = math.log1p(eta * n_b * (1 - argument))
    log_k = m_modes * (math.log(nu(n_b + 1, (1 - eta) * n_b + 1)) + log_mu)
    log_x = math.log(argument)

    photon_numbers, log_probabilities = _fidelity_support(scenario, argument)

    if threshold >= 1 or argument >= 1:
        # Matched background, or x = 1 where every distribution gives the same value.
        objective = math.exp(log_k - m_modes * math.log1p(n_b * (1 - argument)))
        q_star = PhotonPmf(log_probabilities - log_sum_exp(log_probabilities))

        return KktSolution(math.inf, math.inf, q_star, objective, 0.0, 1.0, True, "fidelity", threshold)

    log_a = -m_modes * math.log(n_b + 1 - n_b / argument)
    log_b_argument = n_b + 1 - n_b / argument ** 2
    log_b = -m_modes * math.log(log_b_argument) if log_b_argument > 0 else math.inf
    log_threshold = math.log(threshold) if threshold > 0 else -math.inf

    if log_threshold <= log_a - log_b / 2:
        return _unattained_fidelity(scenario, photon_numbers, log_probabilities, log_x, log_k, log_a,
                                    log_threshold, threshold)

    probabilities = np.exp(log_probabilities)
    powers = np.exp(photon_numbers * log_x)

    def ratio(z):
        return _overlap_ratio(log_probabilities, -np.logaddexp(photon_numbers * log_x, z))

    z, bracket_diagnostics = bisect_increasing(ratio, threshold, -40.0, 0.0, step=5.0, limits=(-745.0, 700.0),
                                               config=config)
    offset = math.exp(z)

    def equations(point):
        scale, shift = point
        weights = 1 / (powers + shift)

        return (scale ** 2 * float(np.dot(probabilities, weights ** 2)) / 4 - 1,
                scale * float(np.dot(probabilities, weights)) / 2 - threshold)

    def feasible(point):
        return point[0] > 0 and point[1] > -powers[-1]

    start = (2 / math.sqrt(float(np.dot(probabilities, 1 / (powers + offset) ** 2))), offset)
    (scale, shift), diagnostics = solve_2d(equations, start, SolverConfig(abs_tol=1e-10, rel_tol=config.rel_tol,
                                                                          max_iter=config.max_iter,
                                                                          damping=config.damping), feasible)
    diagnostics.bracket_expansions = bracket_diagnostics.bracket_expansions

    log_raw = 2 * math.log(scale) - math.log(4) + log_probabilities - 2 * np.log(powers + shift)
    log_normalization = log_sum_exp(log_raw)
    q_star = PhotonPmf(log_raw - log_normalization)
    objective = math.exp(log_k + log_sum_exp(q_star.log_weights + photon_numbers * log_x))
    residual = float(max(abs(value) for value in equations((scale, shift))))
    k_factor = math.exp(log_k)

    if not diagnostics.converged:
        logging.warning("The fidelity minimization did not converge at {}, residual {}".format(scenario, residual),
                        extra={"flag": "kkt_not_converged", "grid_point": scenario.to_dict()})

    # In the Lagrangian form q_n = mult1²·p_n/(4(K·x^n + mult2)²).
    return KktSolution(k_factor * scale, k_factor * shift, q_star, objective, residual,
                       math.exp(-log_normalization), diagnostics.converged, "fidelity", threshold,
                       diagnostics=diagnostics)


def _unattained_fidelity(scenario, photon_numbers, log_probabilities, log_x, log_k, log_a, log_threshold,
                         threshold):
    vacuous = threshold == 0
    flag = "vacuous_covert_constraint" if vacuous else "fidelity_infimum_not_attained"
    logging.warning("The fidelity minimum at {} is approached by distributions with escaping mass, reporting the "
                    "infimum".format(scenario), extra={"flag": flag, "grid_point": scenario.to_dict()})

    # Limit shape p_n·x^(−2n) of the minimizing sequence on the stored support.
    log_shape = log_probabilities - 2 * photon_numbers * log_x
    log_normalization = log_sum_exp(log_shape)
    q_star = PhotonPmf(log_shape - log_normalization)
    objective = math.exp(log_k + 2 * log_threshold - log_a) if not vacuous else 0.0
    mult1 = 2 * math.exp(log_k - log_normalization / 2)

    return KktSolution(mult1, 0.0, q_star, objective, 0.0, 1.0, True, "fidelity", threshold, attained=False,
                       vacuous=vacuous)


def fit_power_law(m_values, deltas):
    """
    Fit δ ≈ A·M^(−β) by least squares in log-log coordinates. Returns (A, β).
    """

    m_values = np.asarray(m_values, dtype=float)
    deltas = np.asarray(deltas, dtype=float)

    if m_values.size < 2 or m_values.shape != deltas.shape:
        raise ValueError("A power-law fit needs at least two pairs of equal length")

    if np.any(m_values <= 0) or np.any(deltas <= 0):
        raise ValueError("A power-law fit needs positive values")

    slope, intercept = np.polyfit(np.log(m_values), np.log(deltas), 1)

    return float(math.exp(intercept)), float(-slope)
