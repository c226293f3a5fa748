"""Gaussian-to-Gaussian density steering with entropy regularization.

Solves the pair of Lyapunov difference equations coupled through their
boundary values, builds the optimal stochastic state-feedback policy from
the minus-branch solution, and decomposes problems with nonzero boundary
means into mean steering plus zero-mean covariance steering.

The boundary-coupled recursion is solved in normalized coordinates, where
the running system becomes a pure integrator driven by transformed input
columns: the forward solution is then an exact monotone sum of positive
semidefinite increments, which is the best-conditioned route back to the
original-coordinate sequences. Horizons with strongly unstable dynamics
still amplify boundary round-off through the coordinate map, so the whole
pipeline runs in extended precision (``np.longdouble``) and results are
rounded to float64 once at the end.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BranchDegenerate,
    DimensionMismatch,
    InfeasibleProblem,
    NonpositiveEpsilon,
    SingularA,
    SingularGramian,
)
from .linalg import (
    GaussianMarginal,
    SymMatrix,
    as_sym,
    definiteness,
    inv,
    psd_sqrt_raw,
    rcond_sym,
    solve_linear,
    sym_eig,
    symmetrize,
)
from .lqr import AffineGaussianPolicy
from .system import INVERTIBILITY_RCOND, LinearSystemModel, validate_assumptions

__all__ = [
    "GaussianMarginal",
    "NormalizedBoundary",
    "LyapunovPair",
    "normalized_boundary",
    "solve_coupled_lyapunov",
    "optimal_density_policy",
    "mean_steering",
    "general_policy",
]

_X = np.longdouble


def _xd(a) -> np.ndarray:
    return np.asarray(a, dtype=_X)


def _f64(a) -> np.ndarray:
    return np.asarray(a, dtype=np.float64)


def _cov_of(boundary) -> np.ndarray:
    if isinstance(boundary, GaussianMarginal):
        return boundary.cov.data
    return as_sym(boundary).data


@dataclass(frozen=True)
class NormalizedBoundary:
    """Boundary covariances pulled into normalized coordinates.

    ``F_mat`` and ``B_mat`` are the forward/backward boundary factors whose
    invertibility the solver requires; they always sum to the identity.
    """

    S0: SymMatrix
    SN: SymMatrix
    F_mat: SymMatrix
    B_mat: SymMatrix


@dataclass(frozen=True)
class LyapunovPair:
    """Minus-branch solution of the coupled Lyapunov boundary problem.

    ``P`` and ``Q`` stack the N+1 matrices of the two sequences. The solver
    also caches the per-step gate matrices, feedback gains, and unit-weight
    noise covariances it computed at extended precision; policy
    construction reuses them instead of re-deriving them from the rounded
    sequences.
    """

    P: np.ndarray
    Q: np.ndarray
    branch: str = "minus"
    gates: np.ndarray | None = None
    gains: np.ndarray | None = None
    noise_base: np.ndarray | None = None

    @property
    def horizon(self) -> int:
        return self.P.shape[0] - 1


class _Pipeline:
    """Extended-precision transition products and Gramian roots for one system."""

    def __init__(self, sys: LinearSystemModel, epsilon: float):
        if epsilon <= 0:
            raise NonpositiveEpsilon(f"epsilon must be positive, got {epsilon}")
        self.sys = sys
        self.eps = _X(epsilon)
        self.A = _xd(sys.A)
        self.B = _xd(sys.B)
        n = sys.n
        eye = np.eye(n, dtype=_X)
        self.Ainv = []
        for k in range(sys.horizon):
            try:
                self.Ainv.append(solve_linear(self.A[k], eye))
            except np.linalg.LinAlgError:
                raise SingularA(k) from None
        # Phi(0, k) for k = 0..N and the controllability Gramian of [0, N]
        self.Phi0 = [eye]
        gc = np.zeros((n, n), dtype=_X)
        for k in range(sys.horizon):
            self.Phi0.append(self.Phi0[-1] @ self.Ainv[k])
            w = self.Phi0[-1] @ self.B[k]
            gc = gc + w @ w.T
        self.Gc = symmetrize(gc)
        if rcond_sym(self.Gc) <= INVERTIBILITY_RCOND:
            raise SingularGramian(
                "controllability Gramian of the full horizon is singular at tolerance"
            )
        w, v = sym_eig(self.Gc)
        self.Gch = symmetrize((v * np.sqrt(w)) @ v.T)
        self.Gcih = symmetrize((v / np.sqrt(w)) @ v.T)

    def normalized(self, sigma0, sigma_terminal):
        n = self.sys.n
        eye = np.eye(n, dtype=_X)
        s0 = symmetrize(self.Gcih @ _xd(sigma0) @ self.Gcih) / self.eps
        phi0n = self.Phi0[self.sys.horizon]
        sn = symmetrize(self.Gcih @ phi0n @ _xd(sigma_terminal) @ phi0n.T @ self.Gcih) / self.eps
        s0h = psd_sqrt_raw(s0)
        root = psd_sqrt_raw(s0h @ sn @ s0h + eye / 4)
        f_core = s0 + eye / 2 - root
        b_core = -s0 + eye / 2 + root
        return s0, sn, s0h, f_core, b_core


class _MinusSolution:
    """Extended-precision minus-branch solution over the whole horizon.

    Carries, all in ``np.longdouble``: the original-coordinate sequences
    ``P[k]``, ``Q[k]``; per step the gate matrix, feedback gain, and
    unit-weight noise covariance; and closed-loop matrices ``A_cl[k]`` and
    noise input ``B_half[k] = B_k gate_k^{-1/2}``.
    """

    def __init__(self, pipe: _Pipeline, qn0: np.ndarray, pn0: np.ndarray):
        sys = pipe.sys
        horizon, n, m = sys.horizon, sys.n, sys.m
        eye_m = np.eye(m, dtype=_X)
        self.pipe = pipe
        self.P = []
        self.Q = []
        self.gate = []
        self.K = []
        self.noise_base = []
        self.A_cl = []
        self.B_half = []
        gcn = np.zeros((n, n), dtype=_X)  # normalized controllability sum over [0, k]
        phic = pipe.Gcih.copy()  # Gc^{-1/2} Phi(0, k)
        mk = pipe.Gch.copy()  # Phi(k, 0) Gc^{1/2}
        for k in range(horizon + 1):
            self.Q.append(symmetrize(mk @ (qn0 - gcn) @ mk.T))
            self.P.append(symmetrize(mk @ (pn0 + gcn) @ mk.T))
            if k == horizon:
                break
            phic_next = phic @ pipe.Ainv[k]
            bn = phic_next @ pipe.B[k]
            gcn_next = gcn + bn @ bn.T
            qn_next = qn0 - gcn_next
            try:
                y = solve_linear(qn_next, bn)
                z = solve_linear(qn_next, phic)
            except np.linalg.LinAlgError:
                raise BranchDegenerate(
                    k, f"normalized solution is singular after step {k}"
                ) from None
            gate = symmetrize(eye_m + bn.T @ y)
            rep = definiteness(_f64(gate))
            if not rep.is_pd:
                raise BranchDegenerate(
                    k, f"gate at step {k} has min eigenvalue {rep.min_eig:.3e}"
                )
            kk = -solve_linear(gate, bn.T @ z)
            base = symmetrize(solve_linear(gate, eye_m))
            self.gate.append(gate)
            self.K.append(kk)
            self.noise_base.append(base)
            self.A_cl.append(pipe.A[k] + pipe.B[k] @ kk)
            self.B_half.append(pipe.B[k] @ psd_sqrt_raw(base))
            gcn, phic, mk = gcn_next, phic_next, pipe.A[k] @ mk


def _minus_solution_x(
    sys: LinearSystemModel, sigma0, sigma_terminal, epsilon: float
) -> _MinusSolution:
    pipe = _Pipeline(sys, epsilon)
    s0, _, s0h, f_core, _ = pipe.normalized(sigma0, sigma_terminal)
    qn0 = symmetrize(s0h @ solve_linear(f_core, s0h))
    pn0 = symmetrize(inv(inv(s0) - inv(qn0)))
    return _MinusSolution(pipe, qn0, pn0)


def normalized_boundary(
    sys: LinearSystemModel, sigma0, sigma_terminal, epsilon: float = 1.0
) -> NormalizedBoundary:
    """Pull the boundary covariances into normalized coordinates.

    S0 and SN are the initial/terminal covariances scaled by the inverse
    square root of the full-horizon controllability Gramian (the terminal
    one pulled back to time zero first); the forward and backward boundary
    factors decide solvability. Requires invertible dynamics and an
    invertible full-horizon controllability Gramian.
    """
    pipe = _Pipeline(sys, epsilon)
    s0, sn, _, f_core, b_core = pipe.normalized(_cov_of(sigma0), _cov_of(sigma_terminal))
    return NormalizedBoundary(
        S0=SymMatrix(_f64(s0)),
        SN=SymMatrix(_f64(sn)),
        F_mat=SymMatrix(_f64(f_core)),
        B_mat=SymMatrix(_f64(b_core)),
    )


def solve_coupled_lyapunov(
    sys: LinearSystemModel, sigma0, sigma_terminal, epsilon: float = 1.0
) -> LyapunovPair:
    """Solve the coupled Lyapunov pair and return the minus-branch solution.

    Validates the solvability assumptions first and raises
    :class:`InfeasibleProblem` (with the report attached) when they fail.
    Both boundary covariances must be positive definite. The returned pair
    satisfies the two forward recursions, the split boundary conditions,
    and has every gate matrix positive definite; a gate failure raises
    :class:`BranchDegenerate` and indicates violated hypotheses rather than
    a recoverable condition (the plus branch is never a fallback).
    """
    sig0 = _cov_of(sigma0)
    sig_t = _cov_of(sigma_terminal)
    for name, cov in (("initial", sig0), ("terminal", sig_t)):
        w = np.linalg.eigvalsh(cov)
        if w[0] <= INVERTIBILITY_RCOND * max(1.0, abs(float(w[-1]))):
            raise InfeasibleProblem(f"{name} covariance must be positive definite")
    report = validate_assumptions(sys, sig0, sig_t, epsilon)
    if not report.feasible:
        raise InfeasibleProblem(
            "; ".join(report.diagnostics) or "solvability assumptions fail", report
        )
    sol = _minus_solution_x(sys, sig0, sig_t, epsilon)
    return LyapunovPair(
        P=_f64(np.stack(sol.P)),
        Q=_f64(np.stack(sol.Q)),
        branch="minus",
        gates=_f64(np.stack(sol.gate)),
        gains=_f64(np.stack(sol.K)),
        noise_base=_f64(np.stack(sol.noise_base)),
    )


def optimal_density_policy(
    sys: LinearSystemModel, lyap: LyapunovPair, epsilon: float = 1.0
) -> AffineGaussianPolicy:
    """Zero-mean optimal density-control policy from a solved Lyapunov pair.

    K_k = -(I + B_k^T Q_{k+1}^{-1} B_k)^{-1} B_k^T Q_{k+1}^{-1} A_k,
    c_k = 0, and noise covariance eps (I + B_k^T Q_{k+1}^{-1} B_k)^{-1}.
    Uses the solver-cached extended-precision gains when available.
    """
    if epsilon <= 0:
        raise NonpositiveEpsilon(f"epsilon must be positive, got {epsilon}")
    horizon, n, m = sys.horizon, sys.n, sys.m
    if lyap.P.shape != (horizon + 1, n, n):
        raise DimensionMismatch("Lyapunov pair does not match the system")
    if lyap.gains is not None and lyap.noise_base is not None:
        return AffineGaussianPolicy(
            lyap.gains, np.zeros((horizon, m)), epsilon * lyap.noise_base
        )
    gains = np.zeros((horizon, m, n))
    covs = np.zeros((horizon, m, m))
    eye_m = np.eye(m)
    for k in range(horizon):
        qinv_b = np.linalg.solve(lyap.Q[k + 1], sys.B[k])
        gate = symmetrize(eye_m + sys.B[k].T @ qinv_b)
        rep = definiteness(gate)
        if not rep.is_pd:
            raise BranchDegenerate(
                k, f"gate at step {k} has min eigenvalue {rep.min_eig:.3e}"
            )
        gains[k] = -np.linalg.solve(gate, qinv_b.T @ sys.A[k])
        covs[k] = epsilon * symmetrize(np.linalg.inv(gate))
    return AffineGaussianPolicy(gains, np.zeros((horizon, m)), covs)


def mean_steering(sys: LinearSystemModel, mu0, mu_terminal):
    """Minimum-energy deterministic input driving the mean between endpoints.

    Returns ``(ubar, mu)`` where ``ubar`` is the (N, m) optimal open-loop
    input sequence

        ubar_k = B_k^T Phi(N, k+1)^T G_r(N, 0)^{-1} (mu_N - Phi(N, 0) mu_0)

    and ``mu`` the (N+1, n) mean path it generates. Raises
    :class:`SingularGramian` when the full-horizon reachability Gramian is
    not invertible. No dynamics inverses are needed.
    """
    mu0 = np.asarray(mu0, dtype=np.float64)
    mu_t = np.asarray(mu_terminal, dtype=np.float64)
    horizon, n, m = sys.horizon, sys.n, sys.m
    if mu0.shape != (n,) or mu_t.shape != (n,):
        raise DimensionMismatch("boundary means have wrong dimension")
    a = _xd(sys.A)
    b = _xd(sys.B)
    phi_n = [None] * (horizon + 1)  # Phi(N, k)
    phi_n[horizon] = np.eye(n, dtype=_X)
    for k in range(horizon - 1, -1, -1):
        phi_n[k] = phi_n[k + 1] @ a[k]
    gr = np.zeros((n, n), dtype=_X)
    for k in range(horizon):
        w = phi_n[k + 1] @ b[k]
        gr = gr + w @ w.T
    gr = symmetrize(gr)
    if rcond_sym(gr) <= INVERTIBILITY_RCOND:
        raise SingularGramian("reachability Gramian of the full horizon is singular")
    defect = _xd(mu_t) - phi_n[0] @ _xd(mu0)
    y = solve_linear(gr, defect)
    ubar = np.zeros((horizon, m), dtype=_X)
    mu = np.zeros((horizon + 1, n), dtype=_X)
    mu[0] = _xd(mu0)
    for k in range(horizon):
        ubar[k] = b[k].T @ (phi_n[k + 1].T @ y)
        mu[k + 1] = a[k] @ mu[k] + b[k] @ ubar[k]
    return _f64(ubar), _f64(mu)


def general_policy(
    sys: LinearSystemModel,
    initial: GaussianMarginal,
    terminal: GaussianMarginal,
    epsilon: float = 1.0,
) -> AffineGaussianPolicy:
    """Optimal policy for boundary distributions with arbitrary means.

    Decomposes into mean steering plus zero-mean covariance steering: the
    policy mean at state x is K_k (x - mu*_k) + ubar_k, stored as gain plus
    feedforward about the origin (c_k = ubar_k - K_k mu*_k); the noise
    covariance is that of the zero-mean problem. The closed-loop mean
    follows mu* and the closed-loop covariance the zero-mean solution.
    Boundary moments beyond mean and covariance are irrelevant: the same
    policy is optimal for any boundary laws with these first two moments.
    """
    lyap = solve_coupled_lyapunov(sys, initial.cov, terminal.cov, epsilon)
    base = optimal_density_policy(sys, lyap, epsilon)
    if not (np.any(initial.mean) or np.any(terminal.mean)):
        return base
    ubar, mu = mean_steering(sys, initial.mean, terminal.mean)
    feed = ubar - np.einsum("kmn,kn->km", base.gains, mu[:-1])
    return AffineGaussianPolicy(base.gains, feed, base.noise_covs)


# ---------------------------------------------------------------------------
# plus-branch propagation, exposed for the property-test harness only
# ---------------------------------------------------------------------------


def _plus_branch_gates(sys: LinearSystemModel, sigma0, sigma_terminal, epsilon: float = 1.0):
    """Propagate the plus-branch solution and report its gate spectra.

    Returns ``(q_seq, invertible, gate_min_eigs)``: the plus-branch Q
    sequence, whether it stayed invertible over the whole horizon, and the
    minimum eigenvalue of each gate computed where defined. Test harness
    use only; the solver never selects this branch.
    """
    pipe = _Pipeline(sys, epsilon)
    s0, _, s0h, f_core, _ = pipe.normalized(_cov_of(sigma0), _cov_of(sigma_terminal))
    eye_n = np.eye(sys.n, dtype=_X)
    core_plus = 2 * s0 + eye_n - f_core  # S0 + I/2 + root
    qn0 = symmetrize(s0h @ solve_linear(core_plus, s0h))

    horizon, n, m = sys.horizon, sys.n, sys.m
    q_seq = np.zeros((horizon + 1, n, n))
    gate_min = np.full(horizon, np.nan)
    invertible = True
    gcn = np.zeros((n, n), dtype=_X)
    phic = pipe.Gcih.copy()
    mk = pipe.Gch.copy()
    for k in range(horizon + 1):
        qk = symmetrize(mk @ (qn0 - gcn) @ mk.T)
        q_seq[k] = _f64(qk)
        if rcond_sym(q_seq[k]) <= INVERTIBILITY_RCOND:
            invertible = False
        if k == horizon:
            break
        phic_next = phic @ pipe.Ainv[k]
        bn = phic_next @ pipe.B[k]
        gcn = gcn + bn @ bn.T
        qn_next = qn0 - gcn
        try:
            gate = symmetrize(np.eye(m, dtype=_X) + bn.T @ solve_linear(qn_next, bn))
        except np.linalg.LinAlgError:
            invertible = False
        else:
            gate_min[k] = float(sym_eig(_f64(gate))[0][0])
        phic, mk = phic_next, pipe.A[k] @ mk
    return q_seq, invertible, gate_min
