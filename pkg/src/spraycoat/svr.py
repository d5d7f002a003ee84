"""Epsilon-insensitive support vector regression via sequential minimal optimization.

Solves, for a fixed combined kernel K:

    max_{alpha, alpha* in [0, C]}  sum (a_n - a*_n) y_n - eps sum (a_n + a*_n)
                                   - 1/2 sum_ni (a_n - a*_n)(a_i - a*_i) K_ni
    s.t. sum (a_n - a*_n) = 0

Internally the pair (alpha, alpha*) is folded into beta = alpha - alpha*
in [-C, C]; complementarity (alpha_n * alpha*_n = 0) then holds by
construction. The working pair is the maximal-KKT-violation pair and each
pairwise subproblem is solved exactly on its piecewise-quadratic segments.

Note on the epsilon term: the dual is implemented with eps * sum(a + a*),
i.e. eps * sum|beta|. Writing it with (a - a*) instead would let the
epsilon term vanish under the equality constraint, making epsilon inert,
which contradicts both the loss definition and the slack-variable primal;
the (a + a*) form is the standard one and is used throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

DEFAULT_TOL = 1e-3
SYMMETRY_TOL = 1e-8


class SvrError(ValueError):
    """Malformed SVR problem."""


@dataclass(frozen=True)
class SvrProblem:
    K: np.ndarray
    y: np.ndarray
    C: float
    epsilon: float

    def __post_init__(self):
        K = np.asarray(self.K, dtype=float)
        y = np.asarray(self.y, dtype=float)
        if K.ndim != 2 or K.shape[0] != K.shape[1]:
            raise SvrError(f"K must be square, got {K.shape}")
        if y.shape != (K.shape[0],):
            raise SvrError(f"y shape {y.shape} does not match K {K.shape}")
        scale = max(1.0, float(np.abs(K).max(initial=0.0)))
        if np.abs(K - K.T).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise SvrError("K must be symmetric")
        if not self.C > 0:
            raise SvrError(f"C must be > 0, got {self.C}")
        if self.epsilon < 0:
            raise SvrError(f"epsilon must be >= 0, got {self.epsilon}")

    @property
    def n(self) -> int:
        return np.asarray(self.y).shape[0]


@dataclass(frozen=True)
class SvrSolution:
    alpha: np.ndarray
    alpha_star: np.ndarray
    b: float
    dual_objective: float
    converged: bool
    iterations: int

    @property
    def beta(self) -> np.ndarray:
        return self.alpha - self.alpha_star


@njit(cache=True)
def _pair_argmax(bi0, s, lo, hi, a_lin, eta, eps):
    """Maximizer over [lo, hi] of the concave piecewise-quadratic pair objective.

    The derivative in bi is a_lin - eta*bi - eps*(sign(bi) - sign(s - bi)),
    non-increasing in bi, so the maximizer is the clipped zero crossing.
    Segment boundaries sit at bi = 0 and bi = s where the signs flip.
    """
    # collect segment edges inside (lo, hi), sorted
    edges = np.empty(4)
    edges[0] = lo
    ne = 1
    if lo < 0.0 < hi:
        edges[ne] = 0.0
        ne += 1
    if lo < s < hi and s != 0.0:
        edges[ne] = s
        ne += 1
    if ne == 3 and edges[1] > edges[2]:
        tmp = edges[1]
        edges[1] = edges[2]
        edges[2] = tmp
    edges[ne] = hi
    ne += 1

    for k in range(ne - 1):
        a = edges[k]
        b = edges[k + 1]
        mid = 0.5 * (a + b)
        si = 1.0 if mid >= 0.0 else -1.0
        sj = 1.0 if (s - mid) >= 0.0 else -1.0
        d_at_a = a_lin - eta * a - eps * (si - sj)
        if d_at_a <= 0.0:
            # derivative already non-positive entering this segment
            return a
        if eta > 0.0:
            root = (a_lin - eps * (si - sj)) / eta
            if root <= b:
                return root
        # eta == 0 or root beyond b: keep walking right
    return hi


@njit(cache=True)
def _smo_core(K, y, C, eps, tol, max_iter, beta, g):
    """Maximal-violating-pair SMO on beta = alpha - alpha*.

    g must equal K @ beta on entry; both beta and g are updated in place.
    Returns (iterations, converged, final_violation).
    """
    n = y.shape[0]
    it = 0
    violation = np.inf
    for it in range(1, max_iter + 1):
        # subgradient bounds of the minimization objective at beta
        # d_plus: right derivative (increase beta), d_minus: left derivative
        i = -1
        j = -1
        dp_min = np.inf
        dm_max = -np.inf
        for nidx in range(n):
            base = g[nidx] - y[nidx]
            if beta[nidx] < C:
                dp = base + (eps if beta[nidx] >= 0.0 else -eps)
                if dp < dp_min:
                    dp_min = dp
                    i = nidx
            if beta[nidx] > -C:
                dm = base + (eps if beta[nidx] > 0.0 else -eps)
                if dm > dm_max:
                    dm_max = dm
                    j = nidx
        violation = dm_max - dp_min
        if i < 0 or j < 0 or i == j or violation <= tol:
            return it - 1, True, violation

        # exact solve of the two-variable subproblem at fixed s = bi + bj
        bi0 = beta[i]
        bj0 = beta[j]
        s = bi0 + bj0
        kii = K[i, i]
        kjj = K[j, j]
        kij = K[i, j]
        eta = max(kii + kjj - 2.0 * kij, 0.0)
        vi = g[i] - bi0 * kii - bj0 * kij
        vj = g[j] - bi0 * kij - bj0 * kjj
        a_lin = y[i] - y[j] - vi + vj + s * (kjj - kij)

        lo = max(-C, s - C)
        hi = min(C, s + C)
        best_bi = _pair_argmax(bi0, s, lo, hi, a_lin, eta, eps)

        d_i = best_bi - bi0
        d_j = (s - best_bi) - bj0
        if d_i == 0.0 and d_j == 0.0:
            # numerically at the pairwise optimum already
            return it - 1, violation <= tol, violation
        beta[i] = best_bi
        beta[j] = s - best_bi
        for nidx in range(n):
            g[nidx] += d_i * K[nidx, i] + d_j * K[nidx, j]
    return max_iter, False, violation


def _bias(beta: np.ndarray, g: np.ndarray, y: np.ndarray, C: float, eps: float) -> float:
    """Average b over free support vectors, else midpoint of the KKT interval."""
    absb = np.abs(beta)
    free = (absb > 1e-10 * C) & (absb < C * (1.0 - 1e-10))
    if np.any(free):
        b_est = y[free] - g[free] - eps * np.sign(beta[free])
        return float(np.mean(b_est))
    base = g - y
    d_plus = base + np.where(beta >= 0.0, eps, -eps)
    d_minus = base + np.where(beta > 0.0, eps, -eps)
    can_up = beta < C
    can_down = beta > -C
    # feasible multiplier interval: [max d_minus, min d_plus]; b = -mu
    mu_lo = np.max(d_minus[can_down]) if np.any(can_down) else -np.inf
    mu_hi = np.min(d_plus[can_up]) if np.any(can_up) else np.inf
    if not np.isfinite(mu_lo) or not np.isfinite(mu_hi):
        return 0.0
    return float(-(mu_lo + mu_hi) / 2.0)


def solve_svr(
    problem: SvrProblem,
    tol: float = DEFAULT_TOL,
    max_passes: int | None = None,
    warm_beta: np.ndarray | None = None,
) -> SvrSolution:
    """Solve the SVR dual by SMO.

    max_passes caps the number of pairwise updates (default 10 * N sweeps of
    N updates each). If the KKT violation does not reach tol the best
    iterate is returned with converged=False.
    """
    K = np.ascontiguousarray(problem.K, dtype=float)
    y = np.ascontiguousarray(problem.y, dtype=float)
    n = problem.n
    C = float(problem.C)
    eps = float(problem.epsilon)
    if max_passes is None:
        max_passes = 10 * n
    max_iter = max_passes * n

    if warm_beta is not None:
        beta = np.clip(np.asarray(warm_beta, dtype=float).copy(), -C, C)
        if abs(beta.sum()) > 1e-12 * max(1.0, C) * n:
            beta -= beta.sum() / n
            np.clip(beta, -C, C, out=beta)
        g = K @ beta
    else:
        beta = np.zeros(n)
        g = np.zeros(n)

    iters, converged, _ = _smo_core(K, y, C, eps, tol, max_iter, beta, g)
    b = _bias(beta, g, y, C, eps)
    alpha = np.maximum(beta, 0.0)
    alpha_star = np.maximum(-beta, 0.0)
    sol = SvrSolution(
        alpha=alpha,
        alpha_star=alpha_star,
        b=b,
        dual_objective=0.0,
        converged=bool(converged),
        iterations=int(iters),
    )
    obj = dual_objective(problem, sol)
    return SvrSolution(alpha, alpha_star, b, obj, bool(converged), int(iters))


def dual_objective(problem: SvrProblem, sol: SvrSolution) -> float:
    """Dual objective with the eps * (alpha + alpha*) term (see module note)."""
    beta = sol.alpha - sol.alpha_star
    return float(
        beta @ problem.y
        - problem.epsilon * np.sum(sol.alpha + sol.alpha_star)
        - 0.5 * beta @ (problem.K @ beta)
    )


def decision_function(sol: SvrSolution, k_row: np.ndarray) -> float:
    """f(x) = sum_n (alpha_n - alpha*_n) K(x, x_n) + b for one query row."""
    k_row = np.asarray(k_row, dtype=float)
    beta = sol.alpha - sol.alpha_star
    if k_row.shape != beta.shape:
        raise SvrError(f"kernel row length {k_row.shape} does not match {beta.shape}")
    return float(beta @ k_row + sol.b)


def kkt_violation(problem: SvrProblem, sol: SvrSolution) -> float:
    """Maximal KKT violation of the solution (0 at the exact optimum)."""
    beta = sol.alpha - sol.alpha_star
    g = problem.K @ beta
    base = g - np.asarray(problem.y, dtype=float)
    eps = problem.epsilon
    C = problem.C
    d_plus = base + np.where(beta >= 0.0, eps, -eps)
    d_minus = base + np.where(beta > 0.0, eps, -eps)
    can_up = beta < C
    can_down = beta > -C
    if not np.any(can_up) or not np.any(can_down):
        return 0.0
    return float(np.max(d_minus[can_down]) - np.min(d_plus[can_up]))
