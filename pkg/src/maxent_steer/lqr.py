"""Entropy-regularized linear-quadratic control.

Backward Riccati sweep for the quadratic terminal cost, the resulting
stochastic affine-Gaussian policy, and the entropy-weight normalization
that reduces any problem to unit weight.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, GateNotPD, NonpositiveEpsilon
from .linalg import DefinitenessReport, SymMatrix, as_sym, definiteness, symmetrize
from .system import LinearSystemModel, _inv_checked

__all__ = [
    "AffineGaussianPolicy",
    "RiccatiSolution",
    "MaxEntLqrProblem",
    "riccati_backward",
    "lqr_policy",
    "epsilon_normalize",
    "denormalize_policy",
    "soft_value_offsets",
]


@dataclass(frozen=True)
class AffineGaussianPolicy:
    """Stochastic policy u_k ~ N(K_k x + c_k, R_k), k = 0..N-1.

    ``gains`` is (N, m, n), ``feedforwards`` (N, m), ``noise_covs``
    (N, m, m). Noise covariances are symmetrized on construction; they are
    positive definite for every entropy-regularized policy and may be
    singular positive semidefinite for point-steering limits.
    """

    gains: np.ndarray
    feedforwards: np.ndarray
    noise_covs: np.ndarray

    def __post_init__(self):
        k = np.ascontiguousarray(np.asarray(self.gains, dtype=np.float64))
        c = np.ascontiguousarray(np.asarray(self.feedforwards, dtype=np.float64))
        r = np.asarray(self.noise_covs, dtype=np.float64)
        if k.ndim != 3:
            raise DimensionMismatch(f"gains must be (N, m, n), got {k.shape}")
        horizon, m, _ = k.shape
        if c.shape != (horizon, m) or r.shape != (horizon, m, m):
            raise DimensionMismatch(
                f"inconsistent policy shapes: gains {k.shape}, "
                f"feedforwards {c.shape}, noise {r.shape}"
            )
        r = np.ascontiguousarray((r + np.swapaxes(r, 1, 2)) / 2)
        for arr in (k, c, r):
            arr.setflags(write=False)
        object.__setattr__(self, "gains", k)
        object.__setattr__(self, "feedforwards", c)
        object.__setattr__(self, "noise_covs", r)

    @property
    def horizon(self) -> int:
        return self.gains.shape[0]

    @property
    def m(self) -> int:
        return self.gains.shape[1]

    @property
    def n(self) -> int:
        return self.gains.shape[2]

    def mean_control(self, k: int, x: np.ndarray) -> np.ndarray:
        return self.gains[k] @ np.asarray(x, dtype=np.float64) + self.feedforwards[k]


@dataclass(frozen=True)
class RiccatiSolution:
    """Backward Riccati sweep output.

    ``Pi`` stacks the N+1 cost-to-go weight matrices; ``gates`` the N
    matrices I + B_k^T Pi_{k+1} B_k whose positive definiteness licenses
    each step (reports included).
    """

    Pi: np.ndarray
    gates: np.ndarray
    gate_reports: tuple[DefinitenessReport, ...]


def riccati_backward(
    sys: LinearSystemModel,
    terminal_weight,
    terminal_target=None,
    epsilon: float = 1.0,
) -> RiccatiSolution:
    """Run the backward Riccati difference recursion from Pi_N = F.

    Pi_k = A_k^T Pi_{k+1} A_k
           - A_k^T Pi_{k+1} B_k (I + B_k^T Pi_{k+1} B_k)^{-1} B_k^T Pi_{k+1} A_k

    Each gate matrix is checked for positive definiteness before inversion;
    :class:`GateNotPD` reports the step where the hypothesis fails. The
    terminal weight may be indefinite. ``terminal_target`` and ``epsilon``
    do not enter the recursion; they are accepted for signature symmetry
    with :func:`lqr_policy` and validated only.
    """
    if epsilon <= 0:
        raise NonpositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    f = as_sym(terminal_weight)
    if f.n != sys.n:
        raise DimensionMismatch(f"terminal weight is {f.n}x{f.n}, state dim is {sys.n}")
    if terminal_target is not None and np.shape(np.atleast_1d(terminal_target)) != (sys.n,):
        raise DimensionMismatch("terminal target has wrong dimension")
    horizon, n, m = sys.horizon, sys.n, sys.m
    pi = np.zeros((horizon + 1, n, n))
    gates = np.zeros((horizon, m, m))
    reports = [None] * horizon
    pi[horizon] = f.data
    eye_m = np.eye(m)
    for k in range(horizon - 1, -1, -1):
        a, b = sys.A[k], sys.B[k]
        pb = pi[k + 1] @ b
        gate = symmetrize(eye_m + b.T @ pb)
        report = definiteness(gate)
        if not report.is_pd:
            raise GateNotPD(k, f"gate at step {k} has min eigenvalue {report.min_eig:.3e}")
        gates[k] = gate
        reports[k] = report
        pa = pi[k + 1] @ a
        pi[k] = symmetrize(a.T @ pa - pa.T @ b @ np.linalg.solve(gate, b.T @ pa))
    return RiccatiSolution(pi, gates, tuple(reports))


def lqr_policy(
    sys: LinearSystemModel,
    ric: RiccatiSolution,
    terminal_target=None,
    epsilon: float = 1.0,
) -> AffineGaussianPolicy:
    """Optimal stochastic policy for the quadratic-terminal-cost problem.

    K_k = -(I + B_k^T Pi_{k+1} B_k)^{-1} B_k^T Pi_{k+1} A_k
    c_k = -K_k Phi(k, N) xbar_N
    R_k = eps (I + B_k^T Pi_{k+1} B_k)^{-1}

    A nonzero target needs Phi(k, N) and therefore invertible dynamics;
    with a zero (or omitted) target no inverses are taken.
    """
    if epsilon <= 0:
        raise NonpositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    horizon, n, m = sys.horizon, sys.n, sys.m
    if ric.Pi.shape != (horizon + 1, n, n):
        raise DimensionMismatch("Riccati solution does not match the system")
    gains = np.zeros((horizon, m, n))
    covs = np.zeros((horizon, m, m))
    for k in range(horizon):
        gains[k] = -np.linalg.solve(ric.gates[k], sys.B[k].T @ ric.Pi[k + 1] @ sys.A[k])
        covs[k] = epsilon * symmetrize(np.linalg.inv(ric.gates[k]))
    feed = np.zeros((horizon, m))
    target = None if terminal_target is None else np.asarray(terminal_target, dtype=np.float64)
    if target is not None and np.any(target != 0):
        phi = np.eye(n)  # Phi(k, N), built backward from k = N
        for k in range(horizon - 1, -1, -1):
            phi = _inv_checked(sys.A[k], k) @ phi
            feed[k] = -gains[k] @ phi @ target
    return AffineGaussianPolicy(gains, feed, covs)


@dataclass(frozen=True)
class MaxEntLqrProblem:
    """Problem data for the quadratic-terminal-cost entropy-regularized LQR."""

    system: LinearSystemModel
    terminal_weight: SymMatrix
    terminal_target: np.ndarray
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "terminal_weight", as_sym(self.terminal_weight))
        target = np.zeros(self.system.n) if self.terminal_target is None else np.asarray(
            self.terminal_target, dtype=np.float64
        )
        object.__setattr__(self, "terminal_target", target)
        if self.epsilon <= 0:
            raise NonpositiveEpsilon(f"epsilon must be positive, got {self.epsilon}")

    def solve(self) -> AffineGaussianPolicy:
        ric = riccati_backward(self.system, self.terminal_weight, self.terminal_target, self.epsilon)
        return lqr_policy(self.system, ric, self.terminal_target, self.epsilon)


def epsilon_normalize(problem: MaxEntLqrProblem) -> MaxEntLqrProblem:
    """Transform to the equivalent unit-entropy-weight problem.

    Scales B by sqrt(eps) and the terminal weight by 1/eps; the rescaled
    control is u' = u / sqrt(eps), so a policy of the normalized problem
    maps back through :func:`denormalize_policy` with the same closed-loop
    state law. Identity when eps is already 1.
    """
    eps = problem.epsilon
    if eps <= 0:
        raise NonpositiveEpsilon(f"epsilon must be positive, got {eps}")
    if eps == 1.0:
        return problem
    return MaxEntLqrProblem(
        system=problem.system.with_input_scaled(np.sqrt(eps)),
        terminal_weight=SymMatrix(problem.terminal_weight.data / eps),
        terminal_target=problem.terminal_target,
        epsilon=1.0,
    )


def denormalize_policy(policy: AffineGaussianPolicy, epsilon: float) -> AffineGaussianPolicy:
    """Map a unit-weight policy back to the original control scale, u = sqrt(eps) u'."""
    if epsilon <= 0:
        raise NonpositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    root = np.sqrt(epsilon)
    return AffineGaussianPolicy(
        root * policy.gains, root * policy.feedforwards, epsilon * policy.noise_covs
    )


def soft_value_offsets(sys: LinearSystemModel, ric: RiccatiSolution, epsilon: float = 1.0) -> np.ndarray:
    """State-independent additive constants of the soft value function.

    Diagnostic only; the policy never needs them. Entry k is the constant
    carried by the value function at step k, accumulated backward from 0 at
    the terminal step via the per-step log-normalizer of the Gaussian
    policy integral.
    """
    if epsilon <= 0:
        raise NonpositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    m = sys.m
    offsets = np.zeros(sys.horizon + 1)
    for k in range(sys.horizon - 1, -1, -1):
        sign, logdet = np.linalg.slogdet(ric.gates[k])
        # log sqrt((2 pi)^m det(eps * gate^{-1})) with det(gate) > 0 by the PD check
        log_norm = 0.5 * (m * np.log(2 * np.pi) + m * np.log(epsilon) - sign * logdet)
        offsets[k] = offsets[k + 1] - epsilon * log_norm
    return offsets
