"""Penalty dual decomposition with MM-linearized block coordinate descent.

The constant-modulus constraint is split off onto an auxiliary copy ``v``.
The inner loop alternates a phase-alignment update of ``v`` with an update of
``x`` that minimizes a linear upper bound of the quartic cost over the
intersection of the CI half-spaces and the per-antenna amplitude disks.  That
linear program is solved through its Lagrangian dual, searched by
Hooke-Jeeves over the CI multipliers; the amplitude multipliers are
eliminated in closed form.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

from .ci import CiInstance
from .manifold import random_point
from .report import InfeasibleCIError, SolverReport
from .scenario import CouplingSet, DfrcScenario, optimal_scale

NU_FLOOR = 1e-8


@dataclass
class PddConfig:
    """Parameters of the PDD outer loop and the Hooke-Jeeves dual search.

    ``hj_step=None`` selects the initial step ``0.5 * (1 + max|mu_start|)``.
    ``mu_bound`` is the multiplier size beyond which the CI set is declared
    empty (the dual is unbounded below exactly when the primal is infeasible).
    """

    rho0: float = 1.0
    c: float = 0.8
    tol: float = 1e-5
    max_outer: int = 300
    max_inner: int = 2000
    hj_step: float | None = None
    hj_shrink: float = 0.5
    hj_min_step: float = 1e-6
    hj_max_evals: int = 5000
    nu_floor: float = NU_FLOOR
    mu_bound: float = 1e8
    tol_ci: float = 1e-5
    deg_tol: float = 1e-6  # |(H mu - d)_m| below this (relative) marks an interior entry

    def __post_init__(self):
        if not 0 < self.c < 1:
            raise ValueError("c must lie in (0, 1)")
        if self.tol <= 0 or self.rho0 <= 0:
            raise ValueError("tol and rho0 must be positive")
        if not 0 < self.hj_shrink < 1:
            raise ValueError("hj_shrink must lie in (0, 1)")


@dataclass(frozen=True)
class MmSurrogate:
    """Linear majorizer ``Re{x^H d} + eps`` of the quartic cost around ``x_t``."""

    C: np.ndarray
    d: np.ndarray
    eps: float
    lambda_C: float

    def value(self, x):
        return float(np.real(np.vdot(x, self.d))) + self.eps


def mm_surrogate_at(x_t, coupling: CouplingSet, total_power) -> MmSurrogate:
    """Build the two-stage linear majorizer at ``x_t``.

    The bound is valid on ``{x : |x_m| <= sqrt(P/M)}`` and touches the cost
    at ``x_t`` whenever ``x_t`` lies on the constant-modulus set.  A negative
    top eigenvalue of ``C`` is replaced by zero, since the step that trades
    ``x^H x`` for ``P`` needs a nonnegative coefficient.
    """
    x_t = np.asarray(x_t, dtype=complex)
    q = coupling.quadratic_forms(x_t)
    lam_B = coupling.lambda_B
    C = 2.0 * np.einsum("l,lij->ij", q, coupling.A) - 2.0 * lam_B * np.outer(x_t, x_t.conj())
    C = 0.5 * (C + C.conj().T)
    lam_C = max(float(np.linalg.eigvalsh(C)[-1]), 0.0)
    d = 2.0 * (C @ x_t - lam_C * x_t)
    P = float(total_power)
    xx = float(np.real(np.vdot(x_t, x_t)))
    f_t = float(q @ q)
    eps = lam_C * P + lam_C * xx - float(np.real(np.vdot(x_t, C @ x_t))) + lam_B * P**2 + lam_B * xx**2 - f_t
    return MmSurrogate(C=C, d=d, eps=eps, lambda_C=lam_C)


def _phase(z):
    # angle(0) is taken as 0
    return np.exp(1j * np.angle(z))


def update_v(x, mu, rho, total_power, num_antennas=None):
    """Phase-align ``v`` with ``x / rho + mu`` at modulus ``sqrt(P/M)``."""
    x = np.asarray(x, dtype=complex)
    M = num_antennas or x.size
    return np.sqrt(total_power / M) * _phase(x / rho + mu)


def al_value(x, v, rho, mu, coupling: CouplingSet):
    """Quartic cost plus the penalty and linear terms on ``x - v``."""
    diff = x - v
    return coupling.objective(x) + float(np.real(np.vdot(diff, diff))) / (2.0 * rho) + float(np.real(np.vdot(mu, diff)))


def realify(z):
    """Stack real and imaginary parts: ``[Re z; Im z]`` along the last axis."""
    z = np.asarray(z)
    return np.concatenate([z.real, z.imag], axis=-1)


def complexify(zbar):
    """Inverse of :func:`realify`."""
    zbar = np.asarray(zbar, dtype=float)
    M = zbar.shape[-1] // 2
    return zbar[..., :M] + 1j * zbar[..., M:]


def real_form(ci: CiInstance, d_tilde):
    """Real-valued data ``(H_hat, d_hat)`` of the x-subproblem.

    With ``xbar = [Re x; Im x]`` the subproblem reads ``min d_hat^T xbar``
    subject to ``H_hat xbar >= gamma`` and ``xbar_m^2 + xbar_{M+m}^2 <= P/M``.
    """
    return realify(ci.rotated), realify(d_tilde)


def dual_objective(mu, nu, H_hat, d_hat, gamma, total_power, num_antennas, nu_floor=NU_FLOOR):
    """Negated Lagrangian dual of the real x-subproblem.

    ``0.25 * w^T D^{-1} w - mu^T gamma + (P/M) sum(nu)`` with
    ``w = H_hat^T mu - d_hat`` and ``D = diag([nu; nu])``.
    """
    M = num_antennas
    mu = np.asarray(mu, dtype=float)
    nu = np.maximum(np.asarray(nu, dtype=float), nu_floor)
    w = np.asarray(H_hat, dtype=float).reshape(-1, 2 * M).T @ mu - d_hat if mu.size else -np.asarray(d_hat, float)
    w2 = w[:M] ** 2 + w[M:] ** 2
    return float(0.25 * np.sum(w2 / nu) - mu @ np.asarray(gamma, float) + total_power / M * np.sum(nu))


def optimal_nu(mu, H_hat, d_hat, total_power, num_antennas, nu_floor=NU_FLOOR):
    """Minimizer of :func:`dual_objective` over ``nu`` for fixed ``mu``."""
    M = num_antennas
    mu = np.asarray(mu, dtype=float)
    w = np.asarray(H_hat, dtype=float).reshape(-1, 2 * M).T @ mu - d_hat if mu.size else -np.asarray(d_hat, float)
    w2 = w[:M] ** 2 + w[M:] ** 2
    return np.maximum(np.sqrt(M * w2 / (4.0 * total_power)), nu_floor)


def recover_x(mu, nu, H_hat, d_hat, nu_floor=NU_FLOOR):
    """Stationary point ``xbar = D^{-1} (H_hat^T mu - d_hat) / 2`` as a complex vector."""
    nu = np.maximum(np.asarray(nu, dtype=float), nu_floor)
    mu = np.asarray(mu, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    w = np.asarray(H_hat, dtype=float).reshape(-1, d_hat.size).T @ mu - d_hat if mu.size else -d_hat
    xbar = 0.5 * w / np.concatenate([nu, nu])
    return complexify(xbar)


@dataclass
class HookeJeevesResult:
    x: np.ndarray
    fun: float
    evaluations: int
    step: float
    converged: bool


def hooke_jeeves(fun, x0, step=None, shrink=0.5, min_step=1e-6, max_evals=5000, lower=0.0, bound=None):
    """Derivative-free pattern search with iterates kept ``>= lower``.

    Parameters
    ----------
    fun : callable
        Objective of a real vector.
    x0 : array_like
        Start point; clipped to ``lower``.
    step : float, optional
        Initial probe length, ``0.5 * (1 + max|x0|)`` by default.
    bound : float, optional
        Stop early once ``max|x|`` exceeds this value (used to detect an
        objective that is unbounded below).

    Returns
    -------
    HookeJeevesResult
        ``converged`` is False when the evaluation budget ran out.
    """
    base = np.maximum(np.asarray(x0, dtype=float).copy(), lower)
    n = base.size
    h = 0.5 * (1.0 + (np.max(np.abs(base)) if n else 0.0)) if step is None else float(step)
    f_base = fun(base)
    evals = 1
    if n == 0:
        return HookeJeevesResult(base, f_base, evals, h, True)

    def explore(point, f_point, h):
        nonlocal evals
        point = point.copy()
        for i in range(n):
            old = point[i]
            for trial in (old + h, old - h):
                if trial < lower:
                    trial = lower
                if trial == old:
                    continue
                point[i] = trial
                f_trial = fun(point)
                evals += 1
                if f_trial < f_point:
                    f_point = f_trial
                    break
                point[i] = old
        return point, f_point

    while h >= min_step and evals < max_evals:
        new, f_new = explore(base, f_base, h)
        if f_new < f_base:
            # pattern moves while they keep paying off
            while evals < max_evals:
                jump = np.maximum(new + (new - base), lower)
                base, f_base = new, f_new
                if bound is not None and np.max(np.abs(base)) > bound:
                    return HookeJeevesResult(base, f_base, evals, h, False)
                f_jump = fun(jump)
                evals += 1
                cand, f_cand = explore(jump, f_jump, h)
                if f_cand < f_base:
                    new, f_new = cand, f_cand
                else:
                    break
        else:
            h *= shrink
    return HookeJeevesResult(base, f_base, evals, h, h < min_step)


def x_block_primal(mu, ci: CiInstance, d, radius, deg_tol=1e-6, sides=64):
    """Primal x-update recovered from CI multipliers ``mu``.

    Minimizes ``Re{x^H d}`` over the CI half-spaces and the disks
    ``|x_m| <= radius``.  Entries with ``w_m = (H mu - d)_m`` away from zero
    sit on the circle at phase ``angle(w_m)``.  Where ``w_m`` vanishes the
    Lagrangian is flat in ``x_m`` and the entry can lie strictly inside its
    disk; those entries are fixed by a small linear program over an inscribed
    polygon that keeps the active constraints tight.

    Returns
    -------
    x : ndarray
    repaired : int
        Number of entries set by the linear program.
    """
    d = np.asarray(d, dtype=complex)
    w = ci.rotated.T @ mu - d if np.size(mu) else -d
    x = radius * _phase(w)
    scale = max(float(np.max(np.abs(w))), float(np.max(np.abs(d))), 1.0)
    deg = np.flatnonzero(np.abs(w) <= deg_tol * scale)
    if deg.size == 0 or ci.num_constraints == 0:
        return x, 0
    x[deg] = 0.0
    n = deg.size
    H = ci.rotated.conj()  # constraint rows act as Re{H x}
    base = np.real(H @ x)
    Hd = np.concatenate([H[:, deg].real, -H[:, deg].imag], axis=1)  # Re{h^H x} in [Re; Im] coordinates
    # minimize the objective plus a heavy price on any shortfall t >= 0
    price = 1e3 * scale * (1.0 + float(np.max(np.abs(ci.rotated))))
    c = np.concatenate([d[deg].real, d[deg].imag, [price]])
    A_ci = np.hstack([-Hd, -np.ones((Hd.shape[0], 1))])
    b_ci = base - ci.thresholds
    ang = 2 * np.pi * np.arange(sides) / sides
    A_disk = np.zeros((n * sides, 2 * n + 1))
    for k in range(n):
        A_disk[k * sides:(k + 1) * sides, k] = np.cos(ang)
        A_disk[k * sides:(k + 1) * sides, n + k] = np.sin(ang)
    b_disk = np.full(n * sides, radius * np.cos(np.pi / sides))
    bounds = [(-radius, radius)] * (2 * n) + [(0, None)]
    sol = linprog(c, A_ub=np.vstack([A_ci, A_disk]), b_ub=np.concatenate([b_ci, b_disk]), bounds=bounds,
                  method="highs")
    if sol.status == 0:
        x[deg] = sol.x[:n] + 1j * sol.x[n:2 * n]
    else:
        x[deg] = radius * _phase(w[deg])
    return x, n


class _XSubproblem:
    """Reduced dual ``phi(mu) = r * sum|H mu - d| - mu^T gamma`` of the x-update."""

    def __init__(self, ci: CiInstance, radius, deg_tol=1e-6):
        self.ci = ci
        self.H = ci.rotated.T  # (M, 2K): columns are the rotated channels
        self.gamma = ci.thresholds
        self.r = radius
        self.deg_tol = deg_tol
        self.d = None

    def __call__(self, mu):
        w = self.H @ mu
        w -= self.d
        return self.r * float(np.abs(w).sum()) - float(mu.dot(self.gamma))

    def primal(self, mu):
        return x_block_primal(mu, self.ci, self.d, self.r, self.deg_tol)


def solve_pdd(
    scenario: DfrcScenario,
    coupling: CouplingSet,
    ci: CiInstance,
    config: PddConfig | None = None,
    seed=None,
    x_init=None,
) -> SolverReport:
    """Constant-modulus CI precoder by penalty dual decomposition.

    Returns a :class:`SolverReport` whose ``objective_trace`` holds the
    augmented Lagrangian at every inner iterate (grouped per outer iteration
    in ``inner_traces``) and whose ``violation_trace`` holds the largest CI
    violation after each outer iteration.

    Raises
    ------
    InfeasibleCIError
        When the CI multipliers diverge, i.e. no constant-modulus-bounded
        vector meets all margins.
    """
    cfg = config or PddConfig()
    t0 = time.perf_counter()
    M = scenario.num_antennas
    P = scenario.total_power
    r = scenario.amplitude
    if x_init is None:
        x = random_point(M, r, np.random.default_rng(seed))
    else:
        x = r * _phase(np.asarray(x_init, dtype=complex))
    v = x.copy()
    lam = np.zeros(M, dtype=complex)
    rho = cfg.rho0
    sub = _XSubproblem(ci, r, cfg.deg_tol)
    mu_ci = np.zeros(ci.num_constraints)

    objective_trace = []
    inner_traces = []
    violation_trace = [ci.max_violation(x)]
    flags = {}
    hj_evals = 0
    hj_unconverged = 0
    repairs = 0
    inner_total = 0
    outer = 0
    residual = np.inf

    def fail(msg):
        report = _report(scenario, coupling, ci, x, v, outer, inner_total, t0, objective_trace,
                         violation_trace, inner_traces, flags, hj_evals, mu_ci, rho, cfg, repairs=repairs)
        raise InfeasibleCIError(msg, report)

    while residual >= cfg.tol and outer < cfg.max_outer:
        f = al_value(x, v, rho, lam, coupling)
        trace = [f]
        delta = 1.0
        n_inner = 0
        while delta >= cfg.tol and n_inner < cfg.max_inner:
            f_pre = f
            v = update_v(x, lam, rho, P, M)
            sur = mm_surrogate_at(x, coupling, P)
            sub.d = sur.d - v / rho + lam
            if ci.num_constraints:
                hj = hooke_jeeves(sub, mu_ci, step=cfg.hj_step, shrink=cfg.hj_shrink, min_step=cfg.hj_min_step,
                                  max_evals=cfg.hj_max_evals, bound=cfg.mu_bound)
                hj_evals += hj.evaluations
                if np.max(hj.x) > cfg.mu_bound:
                    mu_ci = hj.x
                    fail("CI multipliers diverged: the constraints admit no feasible point")
                if not hj.converged:
                    hj_unconverged += 1
                mu_ci = hj.x
            x, n_rep = sub.primal(mu_ci)
            repairs += n_rep
            f = al_value(x, v, rho, lam, coupling)
            trace.append(f)
            delta = abs(f - f_pre) / abs(f) if f != 0 else abs(f - f_pre)
            n_inner += 1
        inner_total += n_inner
        inner_traces.append(trace)
        objective_trace.extend(trace)
        if n_inner >= cfg.max_inner and delta >= cfg.tol:
            flags["inner_cap"] = flags.get("inner_cap", 0) + 1
        residual = float(np.max(np.abs(x - v)))
        lam = lam + (x - v) / rho
        rho *= cfg.c
        outer += 1
        violation_trace.append(ci.max_violation(x))

    if residual >= cfg.tol:
        flags["max_outer_reached"] = True
    if hj_unconverged:
        flags["hj_eval_cap"] = hj_unconverged
    return _report(scenario, coupling, ci, x, v, outer, inner_total, t0, objective_trace, violation_trace,
                   inner_traces, flags, hj_evals, mu_ci, rho, cfg, residual, repairs)


def _report(scenario, coupling, ci, x, v, outer, inner, t0, objective_trace, violation_trace, inner_traces,
            flags, hj_evals, mu_ci, rho, cfg, residual=np.inf, repairs=0):
    r = scenario.amplitude
    # both x (recovered on the circle) and v are constant-modulus; keep the
    # one that meets the CI margins better, preferring v on ties
    v_cm = r * _phase(v)
    x_cm = r * _phase(x)
    chosen, source = v_cm, "v"
    if ci.max_violation(v_cm) > cfg.tol_ci and ci.max_violation(x_cm) < ci.max_violation(v_cm):
        chosen, source = x_cm, "x"
    violation = ci.max_violation(chosen)
    if violation > cfg.tol_ci:
        flags["ci_violation"] = True
    return SolverReport(
        solver="pdd",
        x=chosen,
        alpha=optimal_scale(chosen, scenario.grid, scenario.array),
        objective=coupling.objective(chosen),
        max_violation=violation,
        outer_iterations=outer,
        inner_iterations=inner,
        seconds=time.perf_counter() - t0,
        objective_trace=objective_trace,
        violation_trace=violation_trace,
        inner_traces=inner_traces,
        flags=flags,
        extra={
            "residual_inf": residual,
            "final_rho": rho,
            "hj_evaluations": hj_evals,
            "mu_ci": mu_ci,
            "returned": source,
            "hj_warm_start": True,
            "interior_entries": repairs,
        },
    )
