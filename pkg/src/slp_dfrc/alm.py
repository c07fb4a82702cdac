"""Augmented Lagrangian outer loop with Riemannian BFGS inner solves."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .ci import CiInstance
from .manifold import RbfgsConfig, random_point, rbfgs_minimize
from .report import SolverReport
from .scenario import CouplingSet, DfrcScenario, optimal_scale


@dataclass
class AlmConfig:
    """Penalty/multiplier schedule of the augmented Lagrangian loop.

    ``growth`` multiplies the penalty whenever the largest violation did not
    shrink by at least the factor ``shrink_test`` since the previous outer
    iteration.
    """

    rho0: float = 1.0
    growth: float = 1.1
    shrink_test: float = 0.6
    rho_max: float = 1e6
    mu_max: float = 1e4
    tol: float = 1e-5
    max_outer: int = 200
    max_inner: int = 1000
    violation_tol: float = 1e-3

    def __post_init__(self):
        if not self.growth > 1:
            raise ValueError("growth must exceed 1")
        if not 0 < self.shrink_test < 1:
            raise ValueError("shrink_test must lie in (0, 1)")
        if self.rho0 <= 0 or self.tol <= 0:
            raise ValueError("rho0 and tol must be positive")


def _penalty_slack(x, rho, mu, ci: CiInstance):
    return mu / rho + ci.thresholds - (ci.rotated.conj() @ x).real


def al_value(x, rho, mu, coupling: CouplingSet, ci: CiInstance):
    """Quartic cost plus ``rho/2 * sum max(0, mu/rho + gamma - Re{h^H x})^2``."""
    f = coupling.objective(x)
    if ci.num_constraints == 0:
        return f
    slack = np.maximum(0.0, _penalty_slack(x, rho, mu, ci))
    return f + 0.5 * rho * float(slack @ slack)


def al_euclid_grad(x, rho, mu, coupling: CouplingSet, ci: CiInstance):
    """Gradient of :func:`al_value` for the real inner product ``Re(u^H v)``."""
    g = coupling.gradient(x)
    if ci.num_constraints == 0:
        return g
    slack = _penalty_slack(x, rho, mu, ci)
    active = slack >= 0
    # real part only: the penalty depends on x through Re{h^H x}
    coef = np.where(active, -slack, 0.0)
    return g + rho * (coef @ ci.rotated)


def init_radar_only(coupling: CouplingSet, radius, seed=None, config: RbfgsConfig | None = None, x0=None):
    """Minimize the quartic cost alone on the manifold from a random start.

    Returns the :class:`~slp_dfrc.manifold.RbfgsResult`; its ``trace[0]`` is
    the cost at the random start.
    """
    if x0 is None:
        rng = np.random.default_rng(seed)
        x0 = random_point(coupling.num_antennas, radius, rng)
    return rbfgs_minimize(coupling.objective, coupling.gradient, x0, radius, config or RbfgsConfig())


def solve_alm(
    scenario: DfrcScenario,
    coupling: CouplingSet,
    ci: CiInstance,
    config: AlmConfig | None = None,
    seed=None,
    x_init=None,
) -> SolverReport:
    """Constant-modulus CI precoder by the augmented Lagrangian method.

    Parameters
    ----------
    x_init : ndarray, optional
        Radar-only warm start.  Computed with :func:`init_radar_only` from
        ``seed`` when omitted; pass it in to share one initializer across
        many symbol vectors.
    """
    cfg = config or AlmConfig()
    t0 = time.perf_counter()
    r = scenario.amplitude
    if x_init is None:
        x_init = init_radar_only(coupling, r, seed, RbfgsConfig(tol=cfg.tol, max_iter=cfg.max_inner)).x
    x = r * np.exp(1j * np.angle(x_init))
    n_con = ci.num_constraints
    mu = np.zeros(n_con)
    rho = cfg.rho0
    eps_prev = None
    objective_trace = [coupling.objective(x)]
    violation_trace = [ci.max_violation(x)]
    inner_traces = []
    rho_trace = [rho]
    eps_trace = []
    inner_total = 0
    outer = 0
    flags = {}

    if n_con == 0:
        # nothing to penalize: the radar-only solution is already optimal
        pass
    else:
        delta_out = np.inf
        while delta_out > cfg.tol and outer < cfg.max_outer:
            inner_cfg = RbfgsConfig(tol=max(cfg.tol, 1e-2 * 0.5**outer), max_iter=cfg.max_inner)
            res = rbfgs_minimize(
                lambda z: al_value(z, rho, mu, coupling, ci),
                lambda z: al_euclid_grad(z, rho, mu, coupling, ci),
                x,
                r,
                inner_cfg,
            )
            inner_total += res.iterations
            inner_traces.append(res.trace)
            if res.line_search_failed:
                flags["line_search_failures"] = flags.get("line_search_failures", 0) + 1
            x_new = res.x
            viol = ci.thresholds - (ci.rotated.conj() @ x_new).real
            mu_new = np.minimum(np.maximum(0.0, mu + rho * viol), cfg.mu_max)
            eps = np.maximum(viol, -mu / rho)
            if not (eps_prev is None or np.max(np.abs(eps)) <= cfg.shrink_test * np.max(np.abs(eps_prev))):
                rho = min(cfg.growth * rho, cfg.rho_max)
            delta_out = float(np.linalg.norm(x_new - x))
            x, mu, eps_prev = x_new, mu_new, eps
            eps_trace.append(float(np.max(np.abs(eps))))
            outer += 1
            objective_trace.append(coupling.objective(x))
            violation_trace.append(ci.max_violation(x))
            rho_trace.append(rho)
        if delta_out > cfg.tol:
            flags["max_outer_reached"] = True

    violation = ci.max_violation(x)
    if violation > cfg.violation_tol:
        flags["ci_violation"] = True
    return SolverReport(
        solver="alm",
        x=x,
        alpha=optimal_scale(x, scenario.grid, scenario.array),
        objective=coupling.objective(x),
        max_violation=violation,
        outer_iterations=outer,
        inner_iterations=inner_total,
        seconds=time.perf_counter() - t0,
        objective_trace=objective_trace,
        violation_trace=violation_trace,
        inner_traces=inner_traces,
        flags=flags,
        extra={"rho_trace": rho_trace, "eps_trace": eps_trace, "mu": mu},
    )
