"""
Shared numerical tools: log-domain special functions and sums, Gauss-Laguerre quadrature, the safeguarded
scalar and two-dimensional solvers and the solver tolerances they take.
"""

import math
import logging
import functools

import numpy as np
from scipy.special import logsumexp, roots_laguerre

# Lanczos approximation with g = 7 and nine coefficients.
LANCZOS_G = 7
LANCZOS_COEFFICIENTS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)

HALF_LOG_TWO_PI = 0.5 * math.log(2 * math.pi)

INVERSE_GOLDEN_RATIO = (math.sqrt(5) - 1) / 2

MINIMUM_QUADRATURE_NODES = 64
MAXIMUM_QUADRATURE_NODES = 4096


class SolverError(RuntimeError):
    """
    Raised when a solver cannot produce a result at all, as opposed to a result that only carries a convergence flag.
    """


class SolverConfig:
    """
    Tolerances and iteration limits shared by the scalar minimizer, the two-dimensional Newton solver and the radial
    quadrature.
    """

    def __init__(self, abs_tol=1e-12, rel_tol=1e-10, max_iter=200, damping=1.0):
        if abs_tol <= 0 or rel_tol <= 0:
            raise ValueError("Solver tolerances must be strictly positive, got abs_tol={} and "
                             "rel_tol={}".format(abs_tol, rel_tol))

        if max_iter < 1:
            raise ValueError("The maximum iteration count must be at least 1, got {}".format(max_iter))

        if not 0 < damping <= 1:
            raise ValueError("The damping factor must lie in (0, 1], got {}".format(damping))

        self.abs_tol = float(abs_tol)
        self.rel_tol = float(rel_tol)
        self.max_iter = int(max_iter)
        self.damping = float(damping)

    def to_dict(self):
        return {"abs_tol": self.abs_tol, "rel_tol": self.rel_tol, "max_iter": self.max_iter, "damping": self.damping}

    def __repr__(self):
        return "SolverConfig(abs_tol={}, rel_tol={}, max_iter={}, damping={})".format(self.abs_tol, self.rel_tol,
                                                                                      self.max_iter, self.damping)


class SolverDiagnostics:
    """
    Outcome of a root search: convergence and singularity flags, the iteration count, the final residual norm and the
    trace of all accepted iterates.
    """

    def __init__(self):
        self.converged = False
        self.singular_jacobian = False
        self.iterations = 0
        self.residual = math.inf
        self.bracket_expansions = 0
        self.trace = []

    @property
    def flagged(self):
        return not self.converged or self.singular_jacobian

    def __repr__(self):
        return "SolverDiagnostics(converged={}, singular_jacobian={}, iterations={}, residual={})".format(
            self.converged, self.singular_jacobian, self.iterations, self.residual)


def _lanczos_log_gamma(x):
    # Valid for x >= 0.5, x is an array.
    shifted = x - 1.0
    series = np.full_like(shifted, LANCZOS_COEFFICIENTS[0])

    for index in range(1, len(LANCZOS_COEFFICIENTS)):
        series = series + LANCZOS_COEFFICIENTS[index] / (shifted + index)

    base = shifted + LANCZOS_G + 0.5

    return HALF_LOG_TWO_PI + (shifted + 0.5) * np.log(base) - base + np.log(series)


def log_gamma(x):
    """
    Calculate ln Γ(x) for x > 0 with the Lanczos approximation. Arguments below 1/2 are mapped with the reflection
    formula. Scalars give a float, arrays give an array of the same shape.
    """

    values = np.asarray(x, dtype=float)

    if np.any(~(values > 0)):
        raise ValueError("log_gamma is only defined for positive arguments, got {}".format(x))

    small = values < 0.5
    result = np.empty_like(values)
    result[~small] = _lanczos_log_gamma(values[~small])

    if np.any(small):
        # Γ(x)Γ(1−x) = π/sin(πx), sin(πx) > 0 on (0, 1/2).
        reflected = values[small]
        result[small] = math.log(math.pi) - np.log(np.sin(math.pi * reflected)) - _lanczos_log_gamma(1.0 - reflected)

    if np.ndim(x) == 0:
        return float(result)

    return result


def log_binomial(n, k):
    """
    Calculate ln C(n, k) in the log domain, so the binomial coefficient never overflows. The two lower factorials are
    added before the subtraction, which keeps the result exactly symmetric in k and n − k.
    """

    n_values = np.asarray(n, dtype=float)
    k_values = np.asarray(k, dtype=float)

    if np.any(k_values < 0) or np.any(k_values > n_values):
        raise ValueError("log_binomial needs 0 <= k <= n, got n={} and k={}".format(n, k))

    result = log_gamma(n_values + 1.0) - (log_gamma(k_values + 1.0) + log_gamma(n_values - k_values + 1.0))

    if np.ndim(result) == 0:
        return float(result)

    return result


def log_sum_exp(terms):
    """
    Calculate ln Σ exp(t) with a max shift. An empty sequence gives −inf, terms equal to −inf contribute nothing.
    """

    values = np.asarray(terms, dtype=float).ravel()

    if values.size == 0 or np.all(values == -np.inf):
        return -math.inf

    return float(logsumexp(values))


def minimize_scalar(function, lower_bound, upper_bound, config=None):
    """
    Minimize a unimodal function on [lower_bound, upper_bound] with golden-section search. The result is a tuple
    (x, f(x), converged). Endpoints are compared with the interior result, so a minimum at the boundary returns the
    boundary itself. Without convergence, the best iterate is returned with converged set to False.
    """

    if config is None:
        config = SolverConfig()

    if not lower_bound < upper_bound:
        raise ValueError("minimize_scalar needs lower_bound < upper_bound, got [{}, {}]".format(lower_bound,
                                                                                              upper_bound))

    left, right = float(lower_bound), float(upper_bound)
    inner_left = right - INVERSE_GOLDEN_RATIO * (right - left)
    inner_right = left + INVERSE_GOLDEN_RATIO * (right - left)
    value_inner_left = function(inner_left)
    value_inner_right = function(inner_right)
    converged = False

    for _ in range(config.max_iter):
        if right - left <= config.abs_tol:
            converged = True
            break

        if value_inner_left <= value_inner_right:
            right, inner_right, value_inner_right = inner_right, inner_left, value_inner_left
            inner_left = right - INVERSE_GOLDEN_RATIO * (right - left)
            value_inner_left = function(inner_left)

        else:
            left, inner_left, value_inner_left = inner_left, inner_right, value_inner_right
            inner_right = left + INVERSE_GOLDEN_RATIO * (right - left)
            value_inner_right = function(inner_right)

    else:
        converged = right - left <= config.abs_tol

    if value_inner_left <= value_inner_right:
        best_argument, best_value = inner_left, value_inner_left

    else:
        best_argument, best_value = inner_right, value_inner_right

    # The boundary candidates cover minima sitting exactly on an endpoint.
    for candidate in (float(lower_bound), float(upper_bound)):
        candidate_value = function(candidate)

        if candidate_value < best_value:
            best_argument, best_value = candidate, candidate_value

    if not converged:
        logging.warning("Golden-section search on [{}, {}] did not converge after {} iterations, the best iterate is "
                        "{}".format(lower_bound, upper_bound, config.max_iter, best_argument),
                        extra={"flag": "minimize_scalar_not_converged"})

    return best_argument, best_value, converged


def _finite_difference_jacobian(function, point):
    jacobian = np.empty((2, 2))

    for column in range(2):
        step = max(1e-7, 1e-7 * abs(point[column]))
        forward = point.copy()
        backward = point.copy()
        forward[column] += step
        backward[column] -= step
        jacobian[:, column] = (np.asarray(function(forward), dtype=float)
                               - np.asarray(function(backward), dtype=float)) / (2 * step)

    return jacobian


def solve_2d(function, start, config=None, feasible=None):
    """
    Solve F(x, y) = 0 with damped Newton steps and a central finite-difference Jacobian. A step is halved until the
    residual norm decreases and the optional predicate feasible(point) accepts the trial point, so iterates never leave
    the admissible region. Returns (root, diagnostics).
    """

    if config is None:
        config = SolverConfig()

    diagnostics = SolverDiagnostics()

    point = np.asarray(start, dtype=float).copy()

    if feasible is not None and not feasible(point):
        raise SolverError("The start point {} of solve_2d is not feasible".format(tuple(point)))

    residual_vector = np.asarray(function(point), dtype=float)
    residual = float(np.max(np.abs(residual_vector)))
    diagnostics.trace.append(tuple(point))

    for iteration in range(config.max_iter):
        diagnostics.iterations = iteration

        if residual <= config.abs_tol:
            diagnostics.converged = True
            break

        jacobian = _finite_difference_jacobian(function, point)

        try:
            if not np.all(np.isfinite(jacobian)) or np.linalg.cond(jacobian) > 1e14:
                raise np.linalg.LinAlgError("ill-conditioned Jacobian")

            newton_step = np.linalg.solve(jacobian, -residual_vector)

        except np.linalg.LinAlgError:
            diagnostics.singular_jacobian = True
            logging.warning("Singular Jacobian at {} in solve_2d".format(tuple(point)),
                            extra={"flag": "singular_jacobian"})
            break

        step_length = config.damping
        accepted = False

        # Backtracking on the residual norm.
        for _ in range(60):
            trial = point + step_length * newton_step

            if feasible is None or feasible(trial):
                trial_vector = np.asarray(function(trial), dtype=float)
                trial_residual = float(np.max(np.abs(trial_vector)))

                if np.isfinite(trial_residual) and trial_residual < residual:
                    accepted = True
                    break

            step_length /= 2

        if not accepted:
            # Round-off floor: the residual cannot be decreased any further.
            break

        point, residual_vector, residual = trial, trial_vector, trial_residual
        diagnostics.trace.append(tuple(point))

    else:
        diagnostics.iterations = config.max_iter

    if residual <= config.abs_tol:
        diagnostics.converged = True

    diagnostics.residual = residual

    if not diagnostics.converged:
        logging.warning("solve_2d stopped at {} with residual {} after {} iterations".format(
            tuple(point), residual, diagnostics.iterations), extra={"flag": "solve_2d_not_converged"})

    return (float(point[0]), float(point[1])), diagnostics


def bisect_increasing(function, target, lower, upper, step=2.0, limits=(-math.inf, math.inf), config=None):
    """
    Solve function(z) = target for a nondecreasing function. The start bracket [lower, upper] is widened in steps of
    step until it encloses the target or leaves limits, then bisected until its width is below abs_tol relative to
    max(1, |z|). Returns (root, diagnostics), the trace holds the final bracket.
    """

    if config is None:
        config = SolverConfig()

    diagnostics = SolverDiagnostics()

    while function(lower) > target:
        lower -= step
        diagnostics.bracket_expansions += 1

        if lower < limits[0]:
            logging.warning("No lower bracket for the target {} above {}".format(target, limits[0]),
                            extra={"flag": "bracket_failure"})
            diagnostics.residual = abs(function(limits[0]) - target) if math.isfinite(limits[0]) else math.inf

            return max(lower + step, limits[0]), diagnostics

    while function(upper) < target:
        upper += step
        diagnostics.bracket_expansions += 1

        if upper > limits[1]:
            logging.warning("No upper bracket for the target {} below {}".format(target, limits[1]),
                            extra={"flag": "bracket_failure"})
            diagnostics.residual = abs(function(limits[1]) - target) if math.isfinite(limits[1]) else math.inf

            return min(upper - step, limits[1]), diagnostics

    for iteration in range(config.max_iter):
        diagnostics.iterations = iteration + 1
        middle = (lower + upper) / 2

        if upper - lower <= config.abs_tol * max(1.0, abs(middle)) or middle in (lower, upper):
            break

        if function(middle) < target:
            lower = middle

        else:
            upper = middle

    root = (lower + upper) / 2
    diagnostics.converged = True
    diagnostics.residual = abs(function(root) - target)
    diagnostics.trace.append((lower, upper))

    return root, diagnostics


@functools.lru_cache(maxsize=16)
def laguerre_nodes(node_count):
    """
    Get the Gauss–Laguerre nodes and weights for the weight exp(−u) on [0, ∞).
    """

    nodes, weights = roots_laguerre(node_count)

    # Read-only arrays, the cache shares them between callers.
    nodes.setflags(write=False)
    weights.setflags(write=False)

    return nodes, weights


def integrate_radial(function, scale, config=None):
    """
    Integrate g(r) against the radial density (2r/scale)·exp(−r²/scale) of a circular Gaussian with energy scale.
    The substitution u = r²/scale gives a Gauss–Laguerre integral, the node count is doubled from 64 until two
    successive estimates agree to rel_tol. Returns (value, converged).
    """

    if config is None:
        config = SolverConfig()

    if scale < 0:
        raise ValueError("The energy scale of the radial integral must be non-negative, got {}".format(scale))

    # A zero-energy distribution is a point mass at the origin.
    if scale == 0:
        return float(function(0.0)), True

    def estimate(node_count):
        nodes, weights = laguerre_nodes(node_count)
        radii = np.sqrt(scale * nodes)
        values = np.array([function(radius) for radius in radii], dtype=float)

        return float(np.dot(weights, values))

    node_count = MINIMUM_QUADRATURE_NODES
    previous_value = estimate(node_count)

    while node_count < MAXIMUM_QUADRATURE_NODES:
        node_count *= 2
        value = estimate(node_count)

        if abs(value - previous_value) <= config.rel_tol * abs(value) + config.abs_tol:
            return value, True

        previous_value = value

    logging.warning("Radial quadrature did not converge with {} nodes, last estimate {}".format(node_count,
                                                                                              previous_value),
                    extra={"flag": "quadrature_not_converged"})

    return previous_value, False
