"""Shared fixtures: the 2-D showcase instance and random feasible problems."""

import numpy as np
import pytest

from maxent_steer import LinearSystemModel, normalized_boundary, validate_assumptions

DEMO_A = np.array([[0.9, 0.1], [0.05, 1.2]])
DEMO_B = np.array([[0.0], [0.22]])
DEMO_HORIZON = 50
DEMO_SIGMA0 = np.array([[7.0, 3.0], [3.0, 5.0]])
DEMO_SIGMA_T = 0.3 * np.eye(2)
DEMO_X0 = np.array([-2.0, 4.0])
DEMO_XT = np.array([1.0, 0.0])


@pytest.fixture(scope="session")
def demo_system():
    return LinearSystemModel(DEMO_A, DEMO_B, DEMO_HORIZON)


def random_spd(rng, n, lo=0.4, hi=3.0):
    """SPD matrix with eigenvalues drawn uniformly in [lo, hi]."""
    q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    eigs = rng.uniform(lo, hi, size=n)
    return (q * eigs) @ q.T


def random_invertible_a(rng, n):
    a = np.eye(n) + 0.35 * rng.standard_normal((n, n))
    s = np.linalg.svd(a, compute_uv=False)
    if s[-1] < 0.2:
        a += 0.3 * np.eye(n)
    return a


def random_feasible_instance(rng, n_max=3, horizon_max=10, time_varying=False):
    """Draw (system, sigma0, sigma_terminal, epsilon) satisfying the solver
    assumptions; resamples until the validator accepts.

    Draws within a relative hair of the closed-form degenerate boundaries
    are rejected too (boundary factors must keep a relative minimum
    singular value of 1e-4): the solver excludes the degenerate limit by
    contract, and double-precision residual checks are meaningless
    arbitrarily close to it.
    """
    while True:
        n = int(rng.integers(1, n_max + 1))
        m = int(rng.integers(1, n + 1))
        horizon = int(rng.integers(max(2, 2 * n - 1), horizon_max + 1))
        if time_varying:
            a = np.stack([random_invertible_a(rng, n) for _ in range(horizon)])
            b = rng.standard_normal((horizon, n, m))
        else:
            a = random_invertible_a(rng, n)
            b = rng.standard_normal((n, m))
        sys = LinearSystemModel(a, b, horizon)
        sigma0 = random_spd(rng, n)
        sigma_t = random_spd(rng, n)
        epsilon = float(np.exp(rng.uniform(np.log(0.05), np.log(2.0))))
        report = validate_assumptions(sys, sigma0, sigma_t, epsilon)
        if not report.feasible:
            continue
        nb = normalized_boundary(sys, sigma0, sigma_t, epsilon)
        well_separated = True
        for factor in (nb.F_mat.data, nb.B_mat.data):
            sv = np.linalg.svd(factor, compute_uv=False)
            if sv[-1] < 1e-4 * max(1.0, sv[0]):
                well_separated = False
        if well_separated:
            return sys, sigma0, sigma_t, epsilon


def random_ltv_system(rng, n_max=3, horizon_max=8):
    """Unconstrained random time-varying system with invertible dynamics."""
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, n + 1))
    horizon = int(rng.integers(2, horizon_max + 1))
    a = np.stack([random_invertible_a(rng, n) for _ in range(horizon)])
    b = rng.standard_normal((horizon, n, m))
    return LinearSystemModel(a, b, horizon)


def random_pinned_instance(rng, n_max=3, horizon_max=8):
    """System with invertible dynamics and invertible full-horizon
    reachability Gramian, plus random endpoints."""
    from maxent_steer import reachability_gramian

    while True:
        sys, *_ = random_feasible_instance(rng, n_max=n_max, horizon_max=horizon_max)
        gr = reachability_gramian(sys, sys.horizon, 0).data
        w = np.linalg.eigvalsh(gr)
        if w[0] > 1e-9 * max(1.0, w[-1]):
            x0 = rng.standard_normal(sys.n)
            xt = rng.standard_normal(sys.n)
            return sys, x0, xt
