"""Complex circle manifold and a Riemannian BFGS minimizer on it.

Points are complex vectors whose entries all have modulus ``r``.  The
tangent space at ``x`` is ``{z : Re(z * conj(x)) = 0}``, which is spanned by
the orthonormal directions ``1j * x_m / r``.  The quasi-Newton matrix is
stored in those coordinates as a real ``M x M`` symmetric matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def random_point(size, radius, rng):
    """Uniformly random phases at modulus ``radius``."""
    return radius * np.exp(2j * np.pi * rng.random(size))


def project_tangent(x, z, radius):
    """Orthogonal projection of ``z`` onto the tangent space at ``x``."""
    return z - (np.real(z * np.conj(x)) / radius**2) * x


def retract(x, eta, step, radius):
    """Move along ``step * eta`` and renormalize every entry to ``radius``.

    An entry that lands exactly on zero keeps its previous phase.
    """
    y = x + step * eta
    mag = np.abs(y)
    out = np.where(mag > 0, y / np.where(mag > 0, mag, 1.0), x / radius)
    return radius * out


def transport(x, step_vector, xi, radius):
    """Carry tangent vector ``xi`` from ``x`` to ``retract(x, step_vector, 1)``."""
    return project_tangent(retract(x, step_vector, 1.0, radius), xi, radius)


def tangent_coords(x, z, radius):
    """Coordinates of a tangent vector in the basis ``1j * x / r``."""
    return np.imag(np.conj(x) * z) / radius


def from_tangent_coords(x, t, radius):
    return 1j * t * x / radius


def inner(u, v):
    """Real inner product ``Re(u^H v)``."""
    return float(np.real(np.vdot(u, v)))


@dataclass
class RbfgsConfig:
    tol: float = 1e-5  # stop when ||x_{q+1} - x_q|| drops below this
    grad_tol: float = 1e-12
    max_iter: int = 1000
    armijo_c1: float = 1e-4
    armijo_shrink: float = 0.5
    initial_step: float = 1.0
    max_backtracks: int = 30
    curvature_guard: float = 1e-10
    max_step: float = 1.0  # cap on ||alpha * eta|| in units of the radius


@dataclass
class RbfgsResult:
    x: np.ndarray
    cost: float
    grad_norm: float
    iterations: int
    trace: list = field(default_factory=list)
    line_search_failed: bool = False
    skipped_updates: int = 0


def rbfgs_minimize(cost, euclid_grad, x0, radius, config: RbfgsConfig | None = None):
    """Minimize ``cost`` over the complex circle of modulus ``radius``.

    Parameters
    ----------
    cost : callable
        ``cost(x) -> float``, defined on a neighbourhood of the manifold.
    euclid_grad : callable
        Gradient with respect to the real inner product ``Re(u^H v)``, so
        that ``cost(x + t z) = cost(x) + t Re(g^H z) + O(t^2)``.
    x0 : ndarray
        Starting point (entries of modulus ``radius``).
    radius : float
    config : RbfgsConfig, optional

    Returns
    -------
    RbfgsResult
        ``trace`` holds the cost after each accepted step, starting with the
        initial cost; it is non-increasing by construction of the line search.
    """
    cfg = config or RbfgsConfig()
    x = radius * np.exp(1j * np.angle(x0))
    M = x.size
    f = cost(x)
    g = tangent_coords(x, project_tangent(x, euclid_grad(x), radius), radius)
    B = np.eye(M)
    trace = [f]
    failed = False
    skipped = 0
    it = 0
    while it < cfg.max_iter:
        gnorm = np.linalg.norm(g)
        if gnorm <= cfg.grad_tol:
            break
        p = -np.linalg.solve(B, g)
        slope = float(g @ p)
        if not slope < 0:
            # B lost positive definiteness numerically; restart from steepest descent
            B = np.eye(M)
            p = -g
            slope = -gnorm**2
        eta = from_tangent_coords(x, p, radius)

        alpha = cfg.initial_step
        eta_norm = np.linalg.norm(p)
        if cfg.max_step is not None and alpha * eta_norm > cfg.max_step * radius:
            alpha = cfg.max_step * radius / eta_norm
        for _ in range(cfg.max_backtracks + 1):
            x_new = retract(x, eta, alpha, radius)
            f_new = cost(x_new)
            if f_new <= f + cfg.armijo_c1 * alpha * slope:
                break
            alpha *= cfg.armijo_shrink
        else:
            failed = True
            break
        it += 1

        g_new = tangent_coords(x_new, project_tangent(x_new, euclid_grad(x_new), radius), radius)
        # transport by projection is diagonal in these coordinates
        T = np.real(np.conj(x_new) * x) / radius**2
        s = T * (alpha * p)
        y = g_new - T * g
        B_t = T[:, None] * B * T[None, :]
        ys = float(y @ s)
        if ys > cfg.curvature_guard * np.linalg.norm(y) * np.linalg.norm(s) and np.all(np.abs(T) > 1e-8):
            Bs = B_t @ s
            B = B_t + np.outer(y, y) / ys - np.outer(Bs, Bs) / float(s @ Bs)
            B = 0.5 * (B + B.T)
        else:
            B = B_t if np.all(np.abs(T) > 1e-8) else np.eye(M)
            skipped += 1

        delta = np.linalg.norm(x_new - x)
        x, f, g = x_new, f_new, g_new
        trace.append(f)
        if delta < cfg.tol:
            break

    return RbfgsResult(
        x=x,
        cost=f,
        grad_norm=float(np.linalg.norm(g)),
        iterations=it,
        trace=trace,
        line_search_failed=failed,
        skipped_updates=skipped,
    )
