"""Discrete-time linear time-varying system model and its Gramians.

Hosts the state-transition matrix, reachability/controllability Gramians,
and the feasibility validator that checks the standing assumptions of the
density-steering solver (invertible dynamics, an invertibility window for
the reachability Gramian, and nonsingular normalized boundary factors).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BadWindow, DimensionMismatch, SingularA, SingularGramian
from .linalg import SymMatrix, symmetrize

__all__ = [
    "LinearSystemModel",
    "FeasibilityReport",
    "transition",
    "reachability_gramian",
    "controllability_gramian",
    "validate_assumptions",
]

#: reciprocal condition number below which a matrix counts as singular
INVERTIBILITY_RCOND = 1e-12
#: looser cut for the normalized boundary factors: the closed-form
#: exceptional boundaries must be flagged even when assembled in double
#: precision, where they land a couple of decades above machine epsilon
BOUNDARY_FACTOR_RCOND = 1e-9


@dataclass(frozen=True)
class LinearSystemModel:
    """The pair (A_k, B_k), k = 0..N-1, with x_{k+1} = A_k x_k + B_k u_k.

    ``A`` may be a single (n, n) matrix or a stack of N of them; likewise
    ``B`` with shape (n, m) or (N, n, m). A single matrix is broadcast over
    the horizon (the usual time-invariant case). Invertibility of A_k is
    not required here; operations that need it check it themselves.
    """

    A: np.ndarray
    B: np.ndarray
    horizon: int = None

    def __post_init__(self):
        a = np.asarray(self.A, dtype=np.float64)
        b = np.asarray(self.B, dtype=np.float64)
        if b.ndim == 1:
            if b.shape[0] != a.shape[-1]:
                raise DimensionMismatch(
                    f"one-dimensional B of length {b.shape[0]} does not match "
                    f"state dimension {a.shape[-1]}"
                )
            b = b[:, None]
        horizon = self.horizon
        if a.ndim == 2:
            if horizon is None and b.ndim == 3:
                horizon = b.shape[0]
            if horizon is None:
                raise DimensionMismatch(
                    "horizon is required when A and B are single matrices"
                )
            a = np.broadcast_to(a, (horizon,) + a.shape)
        if b.ndim == 2:
            if horizon is None:
                horizon = a.shape[0]
            b = np.broadcast_to(b, (horizon,) + b.shape)
        if horizon is None:
            horizon = a.shape[0]
        a = np.ascontiguousarray(a, dtype=np.float64)
        b = np.ascontiguousarray(b, dtype=np.float64)
        if horizon < 1:
            raise DimensionMismatch("horizon must be at least 1")
        if a.ndim != 3 or a.shape[0] != horizon or a.shape[1] != a.shape[2]:
            raise DimensionMismatch(f"A must stack {horizon} square matrices, got {a.shape}")
        if b.ndim != 3 or b.shape[0] != horizon or b.shape[1] != a.shape[1]:
            raise DimensionMismatch(f"B must stack {horizon} {a.shape[1]}-row matrices, got {b.shape}")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "A", a)
        object.__setattr__(self, "B", b)
        object.__setattr__(self, "horizon", int(horizon))

    @property
    def n(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.B.shape[2]

    def a(self, k: int) -> np.ndarray:
        return self.A[k]

    def b(self, k: int) -> np.ndarray:
        return self.B[k]

    def with_input_scaled(self, factor: float) -> "LinearSystemModel":
        """A copy with every B_k multiplied by ``factor`` (entropy-weight normalization)."""
        return LinearSystemModel(self.A, self.B * float(factor), self.horizon)


def _inv_checked(a: np.ndarray, step: int) -> np.ndarray:
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0 or s[-1] <= INVERTIBILITY_RCOND * s[0]:
        raise SingularA(step)
    return np.linalg.inv(a)


def transition(sys: LinearSystemModel, k: int, l: int) -> np.ndarray:
    """State-transition matrix Phi(k, l).

    Phi(k, l) = A_{k-1} ... A_l for k > l, the identity for k = l, and
    A_k^{-1} ... A_{l-1}^{-1} for k < l (each factor must be invertible,
    otherwise :class:`SingularA` identifies the offending step).
    Satisfies Phi(k, l) Phi(l, j) = Phi(k, j) whenever defined.
    """
    if not (0 <= k <= sys.horizon and 0 <= l <= sys.horizon):
        raise DimensionMismatch(f"steps ({k}, {l}) outside [0, {sys.horizon}]")
    out = np.eye(sys.n)
    if k > l:
        for j in range(l, k):
            out = sys.A[j] @ out
    elif k < l:
        for j in range(k, l):
            out = out @ _inv_checked(sys.A[j], j)
    return out


def _check_window(sys: LinearSystemModel, k1: int, k0: int):
    if not (0 <= k0 <= sys.horizon and 0 <= k1 <= sys.horizon):
        raise DimensionMismatch(f"window ({k1}, {k0}) outside [0, {sys.horizon}]")
    if k0 >= k1:
        raise BadWindow(f"Gramian window needs k0 < k1, got k0={k0}, k1={k1}")


def reachability_gramian(sys: LinearSystemModel, k1: int, k0: int) -> SymMatrix:
    """Reachability Gramian of the window [k0, k1].

    Equals sum_k Phi(k1, k+1) B_k B_k^T Phi(k1, k+1)^T, computed by the
    forward recursion G <- A_k G A_k^T + B_k B_k^T in O(k1 - k0) products.
    """
    _check_window(sys, k1, k0)
    g = np.zeros((sys.n, sys.n))
    for k in range(k0, k1):
        g = sys.A[k] @ g @ sys.A[k].T + sys.B[k] @ sys.B[k].T
        g = symmetrize(g)
    return SymMatrix(g)


def controllability_gramian(sys: LinearSystemModel, k1: int, k0: int) -> SymMatrix:
    """Controllability Gramian of the window [k0, k1].

    Equals sum_k Phi(k0, k+1) B_k B_k^T Phi(k0, k+1)^T and therefore the
    pullback Phi(k0, k1) G_r(k1, k0) Phi(k0, k1)^T; requires each A_k on
    the window to be invertible.
    """
    _check_window(sys, k1, k0)
    g = np.zeros((sys.n, sys.n))
    phi = np.eye(sys.n)  # Phi(k0, k)
    for k in range(k0, k1):
        phi = phi @ _inv_checked(sys.A[k], k)  # Phi(k0, k+1)
        w = phi @ sys.B[k]
        g += w @ w.T
    return SymMatrix(g)


@dataclass(frozen=True)
class FeasibilityReport:
    """Outcome of :func:`validate_assumptions`.

    ``gramian_window`` is the smallest step k_r such that G_r(k, 0) is
    invertible on [k_r, N] and G_r(N, k) is invertible on [0, k_r - 1], or
    None when no such step exists. The two ``*_min_singular`` fields are
    NaN when no density boundary was supplied.
    """

    a_step_invertible: tuple
    a_condition_numbers: tuple
    gramian_window: int | None
    f_matrix_min_singular: float
    b_matrix_min_singular: float
    feasible: bool
    diagnostics: tuple = field(default=())

    @property
    def all_a_invertible(self) -> bool:
        return all(self.a_step_invertible)


def _psd_invertible(g: np.ndarray) -> bool:
    w = np.linalg.eigvalsh(symmetrize(g))
    return w[-1] > 0 and w[0] > INVERTIBILITY_RCOND * w[-1]


def validate_assumptions(
    sys: LinearSystemModel,
    sigma0=None,
    sigma_terminal=None,
    epsilon: float = 1.0,
) -> FeasibilityReport:
    """Check the standing assumptions of the density-steering solver.

    Verifies per-step invertibility of A_k, searches for the Gramian
    invertibility window k_r, and, when the boundary covariances are
    supplied, forms the normalized boundary factors and reports their
    minimum singular values. Closed-form exceptional boundaries (terminal
    covariance equal to the open-loop forecast, or initial covariance equal
    to the reverse-time forecast) are flagged in the diagnostics: there the
    respective factor vanishes identically and the solver does not apply,
    even though a zero-feedback policy solves the steering problem.

    Never raises; the result is a report.
    """
    n, horizon = sys.n, sys.horizon
    diagnostics = []

    a_ok, a_cond = [], []
    for k in range(horizon):
        s = np.linalg.svd(sys.A[k], compute_uv=False)
        ok = s[0] > 0 and s[-1] > INVERTIBILITY_RCOND * s[0]
        a_ok.append(bool(ok))
        a_cond.append(float(s[0] / s[-1]) if s[-1] > 0 else float("inf"))
        if not ok:
            diagnostics.append(f"A_{k} is singular at tolerance (cond ~ {a_cond[-1]:.2e})")

    # forward Gramians G_r(k, 0) for k = 1..N and backward G_r(N, k) for k = N-1..0
    fwd_ok = {}
    g = np.zeros((n, n))
    for k in range(horizon):
        g = symmetrize(sys.A[k] @ g @ sys.A[k].T + sys.B[k] @ sys.B[k].T)
        fwd_ok[k + 1] = _psd_invertible(g)

    bwd_ok = {}
    g = np.zeros((n, n))
    phi = np.eye(n)  # Phi(N, k+1)
    for k in range(horizon - 1, -1, -1):
        w = phi @ sys.B[k]
        g = symmetrize(g + w @ w.T)
        bwd_ok[k] = _psd_invertible(g)  # G_r(N, k)
        phi = phi @ sys.A[k]

    window = None
    for kr in range(1, horizon + 1):
        if all(fwd_ok[k] for k in range(kr, horizon + 1)) and all(
            bwd_ok[k] for k in range(0, kr)
        ):
            window = kr
            break
    if window is None:
        diagnostics.append("no reachability-Gramian invertibility window exists")

    f_min = float("nan")
    b_min = float("nan")
    boundary_ok = True
    has_boundary = sigma0 is not None and sigma_terminal is not None
    if has_boundary and all(a_ok) and window is not None:
        from .steering import normalized_boundary  # cycle-free at call time

        try:
            nb = normalized_boundary(sys, sigma0, sigma_terminal, epsilon)
        except (SingularGramian, SingularA) as exc:
            boundary_ok = False
            diagnostics.append(f"normalized boundary not computable: {exc}")
        else:
            sf = np.linalg.svd(nb.F_mat.data, compute_uv=False)
            sb = np.linalg.svd(nb.B_mat.data, compute_uv=False)
            f_min, b_min = float(sf[-1]), float(sb[-1])
            if f_min <= BOUNDARY_FACTOR_RCOND * max(1.0, float(sf[0])):
                boundary_ok = False
                diagnostics.append(
                    "forward boundary factor is singular: the terminal covariance "
                    "equals the open-loop forecast Phi S0 Phi^T + eps*G_r, where the "
                    "zero-feedback policy u ~ N(0, eps*I) is already optimal"
                )
            if b_min <= BOUNDARY_FACTOR_RCOND * max(1.0, float(sb[0])):
                boundary_ok = False
                diagnostics.append(
                    "backward boundary factor is singular: the initial covariance "
                    "equals the reverse-time forecast Phi' SN Phi'^T + eps*G_c, where "
                    "time-reversed white noise already achieves the transfer"
                )
    elif has_boundary:
        boundary_ok = False

    feasible = all(a_ok) and window is not None and boundary_ok
    return FeasibilityReport(
        a_step_invertible=tuple(a_ok),
        a_condition_numbers=tuple(a_cond),
        gramian_window=window,
        f_matrix_min_singular=f_min,
        b_matrix_min_singular=b_min,
        feasible=bool(feasible),
        diagnostics=tuple(diagnostics),
    )
