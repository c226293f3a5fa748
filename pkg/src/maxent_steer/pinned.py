"""Point-to-point steering, pinned processes, and bridge verification.

The point-steering controller is the vanishing-terminal-variance limit of
the entropy-regularized regulator: a linear feedback toward the target
with additive Gaussian noise whose covariance degenerates exactly in the
directions the remaining horizon can still reach. The state process it
induces is the noise-driven system conditioned on its endpoint (a pinned
process, generalizing the Brownian bridge), which this module verifies two
independent ways: by propagating the controller's closed loop, and by
Schur-complement conditioning of the joint Gaussian law.

:func:`bridge_verify` checks numerically that the optimal density-steering
process solves the minimum-relative-entropy (Schroedinger bridge) problem
with the noise-driven system as reference: the endpoint-coupling
first-order condition, a coupled-Gramian identity, equality of the pinned
dynamics of the reference and optimal processes, and consistency of the
path-space and coupling relative entropies.

Long unstable horizons make several of these comparisons catastrophically
ill-conditioned in double precision (the conditioning route loses up to
nine digits on the bundled example), so the module computes internally in
``np.longdouble`` like the steering solver and reports float64 results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, NotPD, SingularA, SingularGramian
from .linalg import (
    gaussian_condition,
    pinv_sym,
    rcond_sym,
    solve_linear,
    sym_eig,
    symmetrize,
)
from .lqr import AffineGaussianPolicy
from .steering import _cov_of, _f64, _minus_solution_x, _Pipeline, _xd, _X
from .system import INVERTIBILITY_RCOND, LinearSystemModel, validate_assumptions

__all__ = [
    "PinnedController",
    "PinnedMoments",
    "BridgeReport",
    "pinned_controller",
    "point_to_point_policy",
    "pinned_moments_controller",
    "conditional_gaussian_oracle",
    "gaussian_kl",
    "bridge_verify",
    "coupling_objective",
]

#: eigenvalues of pinned noise covariances at or below this (relative) size
#: are snapped to exact zero so endpoint pinning survives sampling
NOISE_SNAP_RTOL = 1e-12


@dataclass(frozen=True)
class PinnedController:
    """Closed-loop form of the point-steering controller.

    x_{k+1} = closed_loop[k] x_k + target_gain[k] target + B_k w_k with
    w_k ~ N(0, noise_covs[k]); the input noise covariances are positive
    semidefinite and exactly singular where pinning requires it (at the
    last step they project onto the null space of B_{N-1}). ``policy`` is
    the same controller in input-space affine-Gaussian form.
    """

    closed_loop: np.ndarray
    target_gain: np.ndarray
    noise_covs: np.ndarray
    target: np.ndarray
    policy: AffineGaussianPolicy

    @property
    def horizon(self) -> int:
        return self.closed_loop.shape[0]

    def as_policy(self) -> AffineGaussianPolicy:
        return self.policy


@dataclass(frozen=True)
class PinnedMoments:
    """Mean path and two-time covariance kernel of a pinned process.

    ``cov[k, s]`` is E[(x_k - mean_k)(x_s - mean_s)^T]; the kernel is
    stored fully (both triangles).
    """

    mean: np.ndarray
    cov: np.ndarray

    @property
    def horizon(self) -> int:
        return self.mean.shape[0] - 1

    def cov_block(self, k: int, s: int) -> np.ndarray:
        return self.cov[k, s]


def _check_pinned_hypotheses(sys: LinearSystemModel):
    for k in range(sys.horizon):
        s = np.linalg.svd(sys.A[k], compute_uv=False)
        if s[0] == 0 or s[-1] <= INVERTIBILITY_RCOND * s[0]:
            raise SingularA(k)


class _PinnedPieces:
    """Per-step controller matrices in extended precision.

    For each step: Gd = G_r(N, k)^+, the state feedforward map
    D_k = B_k B_k^T Phi(N, k+1)^T Gd, the pinned closed loop
    Ahat_k = (I - D_k Phi(N, k+1)) A_k, the input noise covariance
    W_k = I - B_k^T Phi(N, k+1)^T Gd Phi(N, k+1) B_k (snapped PSD), and
    the state-space noise covariance Lam_k = B_k W_k B_k^T.
    """

    def __init__(self, a_seq, b_seq, require_full_gramian=True):
        horizon = len(a_seq)
        n = a_seq[0].shape[0]
        m = b_seq[0].shape[1]
        eye_n = np.eye(n, dtype=_X)
        eye_m = np.eye(m, dtype=_X)
        phi_n = [None] * (horizon + 1)  # Phi(N, k)
        phi_n[horizon] = eye_n
        for k in range(horizon - 1, -1, -1):
            phi_n[k] = phi_n[k + 1] @ a_seq[k]
        gr = [None] * (horizon + 1)  # G_r(N, k)
        gr[horizon] = np.zeros((n, n), dtype=_X)
        for k in range(horizon - 1, -1, -1):
            w = phi_n[k + 1] @ b_seq[k]
            gr[k] = symmetrize(gr[k + 1] + w @ w.T)
        if require_full_gramian and rcond_sym(gr[0]) <= INVERTIBILITY_RCOND:
            raise SingularGramian("reachability Gramian of the full horizon is singular")
        self.phi_n = phi_n
        self.gr = gr
        self.Ahat = []
        self.D = []
        self.W = []
        self.Lam = []
        for k in range(horizon):
            gd = pinv_sym(gr[k])
            t = b_seq[k] @ b_seq[k].T @ phi_n[k + 1].T @ gd
            self.D.append(t)
            self.Ahat.append((eye_n - t @ phi_n[k + 1]) @ a_seq[k])
            w_raw = symmetrize(eye_m - b_seq[k].T @ phi_n[k + 1].T @ gd @ phi_n[k + 1] @ b_seq[k])
            ew, ev = sym_eig(w_raw)
            ew = np.where(ew <= NOISE_SNAP_RTOL * max(1.0, float(ew[-1])), 0, ew)
            w_cov = symmetrize((ev * ew) @ ev.T)
            self.W.append(w_cov)
            self.Lam.append(symmetrize(b_seq[k] @ w_cov @ b_seq[k].T))


def pinned_controller(sys: LinearSystemModel, x0bar, target) -> PinnedController:
    """Point-steering controller driving every path to ``target`` at time N.

    Requires invertible dynamics and an invertible full-horizon
    reachability Gramian. ``x0bar`` fixes the (deterministic) initial
    state recorded for simulation; the controller matrices themselves do
    not depend on it.
    """
    x0bar = np.asarray(x0bar, dtype=np.float64)
    xt = np.asarray(target, dtype=np.float64)
    if x0bar.shape != (sys.n,) or xt.shape != (sys.n,):
        raise DimensionMismatch("boundary points have wrong dimension")
    _check_pinned_hypotheses(sys)
    pieces = _PinnedPieces(list(_xd(sys.A)), list(_xd(sys.B)))
    horizon, m = sys.horizon, sys.m
    gains = np.zeros((horizon, m, sys.n))
    feeds = np.zeros((horizon, m))
    covs = np.zeros((horizon, m, m))
    xt_x = _xd(xt)
    for k in range(horizon):
        gd = pinv_sym(pieces.gr[k])
        bt_phi = _xd(sys.B[k]).T @ pieces.phi_n[k + 1].T
        gains[k] = _f64(-bt_phi @ gd @ pieces.phi_n[k])
        feeds[k] = _f64(bt_phi @ gd @ xt_x)
        covs[k] = _f64(pieces.W[k])
    policy = AffineGaussianPolicy(gains, feeds, covs)
    return PinnedController(
        closed_loop=_f64(np.stack(pieces.Ahat)),
        target_gain=_f64(np.stack(pieces.D)),
        noise_covs=_f64(np.stack(pieces.W)),
        target=xt,
        policy=policy,
    )


def point_to_point_policy(sys: LinearSystemModel, x0bar, target) -> AffineGaussianPolicy:
    """Input-space policy of the point-steering controller.

    u_k ~ N(-B_k^T Phi(N,k+1)^T G_r(N,k)^+ Phi(N,k) (x - Phi(k,N) target),
            I - B_k^T Phi(N,k+1)^T G_r(N,k)^+ Phi(N,k+1) B_k)

    The noise covariance may be singular; at the final step it projects
    onto the null space of B_{N-1}, which is what pins the endpoint.
    """
    return pinned_controller(sys, x0bar, target).policy


def pinned_moments_controller(sys: LinearSystemModel, x0bar, target) -> PinnedMoments:
    """Mean path and covariance kernel of the controller-driven process.

    Propagates the closed loop forward; cross-covariances follow from
    cov(k, s) = cov(k, k) PhiHat(s, k)^T for k <= s, with PhiHat the
    transition of the pinned closed loop.
    """
    x0bar = np.asarray(x0bar, dtype=np.float64)
    xt = np.asarray(target, dtype=np.float64)
    if x0bar.shape != (sys.n,) or xt.shape != (sys.n,):
        raise DimensionMismatch("boundary points have wrong dimension")
    _check_pinned_hypotheses(sys)
    pieces = _PinnedPieces(list(_xd(sys.A)), list(_xd(sys.B)))
    horizon, n = sys.horizon, sys.n
    mean = np.zeros((horizon + 1, n))
    cov = np.zeros((horizon + 1, horizon + 1, n, n))
    ell = _xd(x0bar)
    diag = np.zeros((n, n), dtype=_X)
    xt_x = _xd(xt)
    diags_x = [diag]
    mean[0] = _f64(ell)
    for k in range(horizon):
        ell = pieces.Ahat[k] @ ell + pieces.D[k] @ xt_x
        diag = symmetrize(pieces.Ahat[k] @ diag @ pieces.Ahat[k].T + pieces.Lam[k])
        mean[k + 1] = _f64(ell)
        diags_x.append(diag)
    for k in range(horizon + 1):
        cross = diags_x[k]
        cov[k, k] = _f64(cross)
        for s in range(k, horizon):
            cross = cross @ pieces.Ahat[s].T
            cov[k, s + 1] = _f64(cross)
            cov[s + 1, k] = cov[k, s + 1].T
    return PinnedMoments(mean, cov)


def conditional_gaussian_oracle(sys: LinearSystemModel, x0bar, target) -> PinnedMoments:
    """Pinned moments straight from Gaussian conditioning, for verification.

    Builds the joint Gaussian of the noise-driven states at a pair of times
    together with the terminal state, conditions on the terminal state via
    :func:`~maxent_steer.linalg.gaussian_condition`, and reads off the
    conditional moments. The joint is assembled in normalized coordinates
    (states premultiplied by Gc^{-1/2} Phi(0, k)) where its blocks are
    bounded partial sums and the conditioned block is the identity; the
    conditional moments are mapped back afterwards. This shares no
    propagation code with :func:`pinned_moments_controller`.
    """
    x0bar = np.asarray(x0bar, dtype=np.float64)
    xt = np.asarray(target, dtype=np.float64)
    if x0bar.shape != (sys.n,) or xt.shape != (sys.n,):
        raise DimensionMismatch("boundary points have wrong dimension")
    pipe = _Pipeline(sys, 1.0)
    horizon, n = sys.horizon, sys.n
    # normalized second moments: cov(y_k, y_s) = gcn[min(k, s)]; gcn[N] is the
    # identity up to round-off, and the computed total is used for the
    # conditioned block so every block derives from the same products
    gcn = [np.zeros((n, n), dtype=_X)]
    mk = [pipe.Gch]  # map back to original coordinates: x_k = mk[k] y_k
    acc = np.zeros((n, n), dtype=_X)
    for k in range(horizon):
        w = pipe.Gcih @ pipe.Phi0[k + 1] @ _xd(sys.B[k])
        acc = symmetrize(acc + w @ w.T)
        gcn.append(acc)
        mk.append(pipe.A[k] @ mk[-1])
    total = gcn[horizon]
    g0 = pipe.Gcih @ _xd(x0bar)  # normalized mean, constant over time
    y_obs = pipe.Gcih @ pipe.Phi0[horizon] @ _xd(xt)

    mean = np.zeros((horizon + 1, n))
    cov = np.zeros((horizon + 1, horizon + 1, n, n))
    mean[horizon] = xt
    for k in range(horizon):
        joint = np.zeros((2 * n, 2 * n), dtype=_X)
        joint[:n, :n] = gcn[k]
        joint[:n, n:] = gcn[k]
        joint[n:, :n] = gcn[k]
        joint[n:, n:] = total
        cond = gaussian_condition(joint, np.concatenate([g0, g0]), y_obs)
        mean[k] = _f64(mk[k] @ _xd(cond.mean))
        cov[k, k] = _f64(symmetrize(mk[k] @ _xd(cond.cov.data) @ mk[k].T))
        for s in range(k + 1, horizon):
            joint = np.zeros((3 * n, 3 * n), dtype=_X)
            joint[:n, :n] = gcn[k]
            joint[:n, n : 2 * n] = gcn[k]
            joint[n : 2 * n, :n] = gcn[k]
            joint[:n, 2 * n :] = gcn[k]
            joint[2 * n :, :n] = gcn[k]
            joint[n : 2 * n, n : 2 * n] = gcn[s]
            joint[n : 2 * n, 2 * n :] = gcn[s]
            joint[2 * n :, n : 2 * n] = gcn[s]
            joint[2 * n :, 2 * n :] = total
            cond = gaussian_condition(joint, np.concatenate([g0, g0, g0]), y_obs)
            block = _xd(cond.cov.data)[:n, n:]
            cov[k, s] = _f64(mk[k] @ block @ mk[s].T)
            cov[s, k] = cov[k, s].T
        # conditioning on the terminal state leaves no residual covariance with it
        cov[k, horizon] = 0.0
        cov[horizon, k] = 0.0
    return PinnedMoments(mean, cov)


def _kl_x(sigma: np.ndarray, xi: np.ndarray) -> _X:
    """KL divergence between zero-mean Gaussians, dtype-generic, PD inputs."""
    sigma = np.asarray(sigma)
    xi = np.asarray(xi, dtype=sigma.dtype)
    n = sigma.shape[0]
    ws = sym_eig(sigma)[0]
    wx = sym_eig(xi)[0]
    if ws[0] <= 0:
        raise NotPD(f"first covariance is not positive definite (min eig {float(ws[0]):.3e})")
    if wx[0] <= 0:
        raise NotPD(f"second covariance is not positive definite (min eig {float(wx[0]):.3e})")
    trace_term = np.trace(solve_linear(xi, sigma))
    return (np.sum(np.log(wx)) - np.sum(np.log(ws)) + trace_term - n) / 2


def gaussian_kl(sigma, xi) -> float:
    """KL divergence between zero-mean Gaussians with the given covariances.

    0.5 (log det Xi - log det Sigma + tr(Xi^{-1} Sigma) - n); nonnegative,
    zero exactly when the covariances coincide, and asymmetric in its
    arguments. Both inputs must be positive definite.
    """
    sigma = _cov_of(sigma)
    xi = _cov_of(xi)
    if sigma.shape != xi.shape:
        raise DimensionMismatch("covariances have different dimensions")
    return float(_kl_x(sigma, xi))


@dataclass(frozen=True)
class BridgeReport:
    """Residual bundle from :func:`bridge_verify` (all relative norms).

    ``first_order_residual``: endpoint-coupling optimality condition;
    ``gramian_coupling_residual``: the coupled-Gramian identity linking the
    reference and closed-loop controllability Gramians;
    ``feedforward_residual``, ``closed_loop_residual``, ``noise_residual``:
    equality of the pinned dynamics of reference and optimal processes;
    ``kl_residual``: path relative entropy against the endpoint-coupling
    relative entropy. ``skipped_reason`` is set (and residuals are NaN)
    when the steering problem itself was infeasible.
    """

    first_order_residual: float
    gramian_coupling_residual: float
    feedforward_residual: float
    closed_loop_residual: float
    noise_residual: float
    kl_residual: float
    path_kl: float
    coupling_kl: float
    coupling_cross: np.ndarray | None
    epsilon_normalized: bool
    skipped_reason: str | None = None

    @property
    def residuals(self) -> dict:
        return {
            "first_order": self.first_order_residual,
            "gramian_coupling": self.gramian_coupling_residual,
            "feedforward": self.feedforward_residual,
            "closed_loop": self.closed_loop_residual,
            "noise": self.noise_residual,
            "kl_decomposition": self.kl_residual,
        }

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())

    def ok(self, tol: float = 1e-7) -> bool:
        if self.skipped_reason is not None:
            return False
        return self.max_residual <= tol


def _rel(diff: np.ndarray, ref: np.ndarray) -> float:
    num = float(np.linalg.norm(_f64(diff)))
    den = 1.0 + float(np.linalg.norm(_f64(ref)))
    return num / den


def bridge_verify(
    sys: LinearSystemModel, sigma0, sigma_terminal, epsilon: float = 1.0
) -> BridgeReport:
    """Verify that the optimal steering process is the reference's bridge.

    Runs on the unit-entropy-weight problem; a different weight is first
    absorbed into the input matrix (noted by ``epsilon_normalized``).
    Report-style: an infeasible instance yields NaN residuals and a
    ``skipped_reason`` instead of an exception.
    """
    sig0 = _cov_of(sigma0)
    sig_t = _cov_of(sigma_terminal)
    normalized = epsilon != 1.0
    work = sys.with_input_scaled(np.sqrt(epsilon)) if normalized else sys

    def skipped(reason):
        nan = float("nan")
        return BridgeReport(
            nan, nan, nan, nan, nan, nan, nan, nan, None, normalized, reason
        )

    for name, cov in (("initial", sig0), ("terminal", sig_t)):
        w = np.linalg.eigvalsh(cov)
        if w[0] <= INVERTIBILITY_RCOND * max(1.0, abs(float(w[-1]))):
            return skipped(f"{name} covariance is not positive definite")
    report = validate_assumptions(work, sig0, sig_t, 1.0)
    if not report.feasible:
        return skipped("; ".join(report.diagnostics) or "solvability assumptions fail")

    sol = _minus_solution_x(work, sig0, sig_t, 1.0)
    horizon, n = work.horizon, work.n
    a_seq = list(sol.pipe.A)
    b_seq = list(sol.pipe.B)
    acl_seq = sol.A_cl
    bhalf_seq = sol.B_half
    sig0_x = _xd(sig0)
    sig_t_x = _xd(sig_t)

    # endpoint coupling first-order condition with Y the optimal cross-covariance
    phi_q = np.eye(n, dtype=_X)
    for k in range(horizon):
        phi_q = acl_seq[k] @ phi_q  # Phi_Q(N, 0)
    y_cross = phi_q @ sig0_x
    phi_back = np.eye(n, dtype=_X)  # Phi(N, k) built backward
    grs = [None] * (horizon + 1)
    grs[horizon] = np.zeros((n, n), dtype=_X)
    for k in range(horizon - 1, -1, -1):
        w = phi_back @ b_seq[k]
        grs[k] = symmetrize(grs[k + 1] + w @ w.T)
        phi_back = phi_back @ a_seq[k]
    phi0 = phi_back  # Phi(N, 0)
    gr0 = grs[0]
    schur = sig_t_x - y_cross @ solve_linear(sig0_x, y_cross.T)
    lhs = solve_linear(sig0_x, y_cross.T) @ solve_linear(schur.T, np.eye(n, dtype=_X))
    rhs = phi0.T @ solve_linear(gr0, np.eye(n, dtype=_X))
    res_first_order = _rel(lhs - rhs, rhs)

    # coupled-Gramian identity: R1 + R1 Q^{-1} R2 - R2 = 0 over the horizon
    r1 = [None] * (horizon + 1)
    r2 = [None] * (horizon + 1)
    r1[horizon] = np.zeros((n, n), dtype=_X)
    r2[horizon] = np.zeros((n, n), dtype=_X)
    eye_n = np.eye(n, dtype=_X)
    for k in range(horizon - 1, -1, -1):
        ai = sol.pipe.Ainv[k]
        r1[k] = symmetrize(ai @ (r1[k + 1] + b_seq[k] @ b_seq[k].T) @ ai.T)
        aqi = solve_linear(acl_seq[k], eye_n)
        r2[k] = symmetrize(aqi @ (r2[k + 1] + bhalf_seq[k] @ bhalf_seq[k].T) @ aqi.T)
    res_gramian = 0.0
    for k in range(horizon + 1):
        jk = r1[k] + r1[k] @ solve_linear(sol.Q[k], r2[k]) - r2[k]
        scale = max(float(np.linalg.norm(_f64(r1[k]))), float(np.linalg.norm(_f64(r2[k]))))
        res_gramian = max(res_gramian, float(np.linalg.norm(_f64(jk))) / (1.0 + scale))

    # pinned-dynamics equality of the reference and optimal processes
    ref_pieces = _PinnedPieces(a_seq, b_seq)
    opt_pieces = _PinnedPieces(acl_seq, bhalf_seq)
    res_feed = res_cl = res_noise = 0.0
    for k in range(horizon):
        res_feed = max(res_feed, _rel(ref_pieces.D[k] - opt_pieces.D[k], ref_pieces.D[k]))
        res_cl = max(res_cl, _rel(ref_pieces.Ahat[k] - opt_pieces.Ahat[k], ref_pieces.Ahat[k]))
        res_noise = max(res_noise, _rel(ref_pieces.Lam[k] - opt_pieces.Lam[k], ref_pieces.Lam[k]))

    # path relative entropy vs the endpoint-coupling relative entropy
    path_kl = _X(0.0)
    sigma_k = sig0_x
    for k in range(horizon):
        s_ref = symmetrize(b_seq[k] @ b_seq[k].T)
        s_opt = symmetrize(bhalf_seq[k] @ bhalf_seq[k].T)
        w_ref, _ = sym_eig(s_ref)
        rank = int(np.sum(w_ref > INVERTIBILITY_RCOND * max(1.0, float(w_ref[-1]))))
        if rank == 0:
            continue
        w_opt = sym_eig(s_opt)[0]
        s_ref_pinv = pinv_sym(s_ref)
        delta = b_seq[k] @ _xd(sol.K[k])
        step = (
            np.sum(np.log(w_ref[-rank:]))
            - np.sum(np.log(w_opt[-rank:]))
            + np.trace(s_ref_pinv @ s_opt)
            + np.trace(s_ref_pinv @ delta @ sigma_k @ delta.T)
            - rank
        ) / 2
        path_kl = path_kl + step
        sigma_k = symmetrize(acl_seq[k] @ sigma_k @ acl_seq[k].T + s_opt)
    coupling_opt = np.zeros((2 * n, 2 * n), dtype=_X)
    coupling_opt[:n, :n] = sig0_x
    coupling_opt[:n, n:] = y_cross.T
    coupling_opt[n:, :n] = y_cross
    coupling_opt[n:, n:] = sig_t_x
    coupling_ref = np.zeros((2 * n, 2 * n), dtype=_X)
    coupling_ref[:n, :n] = sig0_x
    coupling_ref[:n, n:] = (phi0 @ sig0_x).T
    coupling_ref[n:, :n] = phi0 @ sig0_x
    coupling_ref[n:, n:] = symmetrize(phi0 @ sig0_x @ phi0.T + gr0)
    coupling_kl = _kl_x(coupling_opt, coupling_ref)
    res_kl = abs(float(path_kl - coupling_kl)) / (1.0 + abs(float(coupling_kl)))

    return BridgeReport(
        first_order_residual=res_first_order,
        gramian_coupling_residual=res_gramian,
        feedforward_residual=res_feed,
        closed_loop_residual=res_cl,
        noise_residual=res_noise,
        kl_residual=res_kl,
        path_kl=float(path_kl),
        coupling_kl=float(coupling_kl),
        coupling_cross=_f64(y_cross),
        epsilon_normalized=normalized,
    )


def coupling_objective(sys: LinearSystemModel, sigma0, sigma_terminal, y) -> float:
    """Concave objective whose maximizer is the optimal endpoint cross-covariance.

    f(Y) = log det(Sigma_N - Y Sigma_0^{-1} Y^T) + 2 tr(Phi(N,0)^T G_r(N,0)^{-1} Y)

    Raises :class:`NotPD` when Y makes the log-det argument leave the cone
    (such Y are infeasible as cross-covariances).
    """
    sig0 = _xd(_cov_of(sigma0))
    sig_t = _xd(_cov_of(sigma_terminal))
    y = _xd(y)
    n = sys.n
    phi = np.eye(n, dtype=_X)
    a = _xd(sys.A)
    b = _xd(sys.B)
    gr = np.zeros((n, n), dtype=_X)
    for k in range(sys.horizon - 1, -1, -1):
        w = phi @ b[k]
        gr = gr + w @ w.T
        phi = phi @ a[k]
    schur = symmetrize(sig_t - y @ solve_linear(sig0, y.T))
    w = sym_eig(schur)[0]
    if w[0] <= 0:
        raise NotPD("cross-covariance is infeasible for the boundary marginals")
    logdet = float(np.sum(np.log(w)))
    trace_term = float(np.trace(phi.T @ solve_linear(symmetrize(gr), y)))
    return logdet + 2.0 * trace_term
