"""Radar and communication metrics for precoded waveform blocks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.special import erfc

from .ci import psk_decide, symbol_indices
from .scenario import ArrayModel, BeampatternGrid, steering_vector

DEFAULT_MISS_PENALTY_DEG = 90.0


def complex_noise(rng, shape, power):
    """Circular complex Gaussian samples with variance ``power`` per entry."""
    return np.sqrt(power / 2.0) * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def simulate_capture(X, array: ArrayModel, target_angles, target_amplitudes, noise_power, seed=None):
    """Monostatic echo ``Y = sum_k beta_k a_k a_k^H X + Z`` for an ``M x N`` block."""
    X = np.asarray(X, dtype=complex)
    angles = np.atleast_1d(np.asarray(target_angles, dtype=float))
    amps = np.broadcast_to(np.asarray(target_amplitudes, dtype=complex), angles.shape)
    Y = np.zeros_like(X)
    if angles.size:
        a = steering_vector(array, angles)  # (K, M)
        Y += (a.T * amps) @ (a.conj() @ X)
    if noise_power > 0:
        Y += complex_noise(np.random.default_rng(seed), X.shape, noise_power)
    return Y


def beampattern_mse(blocks, reference, grid: BeampatternGrid, array: ArrayModel):
    """Mean over all slots of ``mean_l |ref_l - |a_l^H x|^2|^2``.

    ``blocks`` is one ``M x N`` array or a list of them; ``reference`` holds
    the reference pattern on ``grid``.
    """
    if isinstance(blocks, np.ndarray) and blocks.ndim == 2:
        blocks = [blocks]
    X = np.concatenate([np.asarray(b, dtype=complex) for b in blocks], axis=1)
    if X.shape[1] == 0:
        raise ValueError("no slots to evaluate")
    a = steering_vector(array, grid.angles)
    P = np.abs(a.conj() @ X) ** 2  # (L, N)
    ref = np.asarray(reference, dtype=float)[:, None]
    return float(np.mean(np.abs(ref - P) ** 2))


def _projections(Y, X, a):
    # a^H Y r with r = X^H a, and ||r||^2, for every row of a
    aY = a.conj() @ Y  # (G, N)
    aX = a.conj() @ X  # (G, N), r^H = aX
    num = np.sum(aY * aX.conj(), axis=1)
    rr = np.sum(np.abs(aX) ** 2, axis=1)
    return num, rr, aX


def _glr_ratio(Y, X, array, theta):
    # residual-power ratio s1 / s0 of the single-target fit; 1 where r = 0
    Y = np.asarray(Y, dtype=complex)
    X = np.asarray(X, dtype=complex)
    M = Y.shape[0]
    a = np.atleast_2d(steering_vector(array, np.atleast_1d(theta)))
    yy = float(np.real(np.vdot(Y, Y)))
    num, rr, _ = _projections(Y, X, a)
    out = np.ones(a.shape[0])
    ok = (rr > 0) & (yy > 0)
    if np.any(ok):
        out[ok] = np.clip(1.0 - np.abs(num[ok]) ** 2 / (M * rr[ok] * yy), 0.0, 1.0)
    return out


def glr(Y, X, array: ArrayModel, theta):
    """Single-target generalized likelihood ratio ``1 - (s1 / s0)^M``.

    ``s0`` is the mean residual power with no target and ``s1`` the one
    after the least-squares rank-one fit ``beta a(theta) r(theta)^H`` with
    ``r = X^H a``.  ``theta`` may be a scalar or an array of angles.
    """
    M = np.asarray(Y).shape[0]
    out = 1.0 - _glr_ratio(Y, X, array, theta) ** M
    return float(out[0]) if np.ndim(theta) == 0 else out


def glr_amplitude(Y, X, array: ArrayModel, theta):
    """Least-squares amplitude ``a^H Y r / (||a||^2 ||r||^2)``."""
    a = steering_vector(array, theta)
    r = np.asarray(X).conj().T @ a
    return complex(a.conj() @ np.asarray(Y) @ r / (np.vdot(a, a).real * np.vdot(r, r).real))


@dataclass
class IglrtResult:
    angles: np.ndarray  # accepted angles (radians) in detection order
    scores: np.ndarray  # GLR / conditional GLR at each accepted angle
    residual: np.ndarray  # data left after the joint least-squares fit
    amplitudes: np.ndarray  # jointly fitted amplitudes of the accepted components


def _fit_components(Y, X, a_list):
    # joint least squares of Y on the rank-one atoms a_i r_i^H
    comps = np.stack([np.outer(a, a.conj() @ X) for a in a_list], axis=0)  # a r^H with r = X^H a
    C = comps.reshape(len(a_list), -1).T
    coef, *_ = np.linalg.lstsq(C, Y.reshape(-1), rcond=None)
    residual = Y - (C @ coef).reshape(Y.shape)
    return coef, residual


def _conditional_ratio(Y, X, array, angles, detected):
    Y = np.asarray(Y, dtype=complex)
    X = np.asarray(X, dtype=complex)
    M = Y.shape[0]
    if len(detected) == 0:
        return _glr_ratio(Y, X, array, np.atleast_1d(angles))
    a = steering_vector(array, np.atleast_1d(angles))
    a_det = steering_vector(array, np.asarray(detected, dtype=float))
    _, Y_res = _fit_components(Y, X, list(a_det))
    res_pow = float(np.real(np.vdot(Y_res, Y_res)))
    out = np.ones(a.shape[0])
    if res_pow <= 1e-24 * max(float(np.real(np.vdot(Y, Y))), 1e-300):
        return out
    r_det = X.conj().T @ a_det.T  # (N, k)
    G = (a_det.conj() @ a_det.T) * (r_det.T @ r_det.conj())  # <c_i, c_j>
    num, rr, aX = _projections(Y_res, X, a)
    cc = M * rr
    # b_i = <c_i, c_theta> = (a_i^H a)(r^H r_i)
    b = (a_det.conj() @ a.T).T * (aX @ r_det)
    proj = np.real(np.einsum("gi,gi->g", b.conj(), np.linalg.solve(G, b.T).T))
    perp = cc - proj
    ok = perp > 1e-10 * np.maximum(cc, 1e-300)
    out[ok] = np.clip(1.0 - np.abs(num[ok]) ** 2 / (perp[ok] * res_pow), 0.0, 1.0)
    return out


def conditional_glr(Y, X, array: ArrayModel, angles, detected):
    """Conditional GLR of one more target at each of ``angles``.

    All amplitudes (the detected ones and the candidate) are re-fitted
    jointly by least squares.  Candidates already explained by the detected
    set score zero.
    """
    M = np.asarray(Y).shape[0]
    return 1.0 - _conditional_ratio(Y, X, array, angles, detected) ** M


def iglrt_estimate(Y, X, array: ArrayModel, angles, k_max, threshold, refine=True, max_sweeps=20):
    """Greedy multi-target angle estimation by the iterative GLRT.

    A new angle is accepted while its (conditional) GLR exceeds
    ``threshold``; at most ``k_max`` angles are returned.  The search picks
    the smallest residual ratio, which orders angles like the GLR but does
    not saturate at 1 in floating point.

    With ``refine`` every accepted angle is re-estimated conditioned on the
    others after each acceptance, sweeping until nothing moves.  Without it
    the first estimates stay biased by the echoes not yet modelled.
    """
    Y = np.asarray(Y, dtype=complex)
    X = np.asarray(X, dtype=complex)
    M = Y.shape[0]
    angles = np.asarray(angles, dtype=float)
    idx, scores = [], []

    def best_given(others):
        ratio = _conditional_ratio(Y, X, array, angles, angles[others])
        b = int(np.argmin(ratio))
        return b, 1.0 - ratio[b] ** M

    for _ in range(int(k_max)):
        best, score = best_given(idx)
        if not score > threshold:
            break
        idx.append(best)
        scores.append(score)
        if refine and len(idx) > 1:
            for _ in range(max_sweeps):
                moved = False
                for i in range(len(idx)):
                    b, sc = best_given(idx[:i] + idx[i + 1:])
                    if b != idx[i] and b not in idx:
                        idx[i] = b
                        moved = True
                    scores[i] = sc if b == idx[i] else scores[i]
                if not moved:
                    break
    detected = angles[idx]
    if idx:
        coef, residual = _fit_components(Y, X, list(steering_vector(array, detected)))
    else:
        coef, residual = np.zeros(0, dtype=complex), Y.copy()
    return IglrtResult(detected, np.asarray(scores), residual, coef)


def match_errors(estimates_deg, truth_deg, miss_penalty_deg=DEFAULT_MISS_PENALTY_DEG):
    """Squared angle errors (deg^2) per true target after optimal assignment.

    Unmatched true targets cost ``miss_penalty_deg**2``; surplus estimates
    are ignored.
    """
    truth = np.atleast_1d(np.asarray(truth_deg, dtype=float))
    est = np.atleast_1d(np.asarray(estimates_deg, dtype=float))
    err = np.full(truth.size, miss_penalty_deg**2)
    if est.size and truth.size:
        cost = (truth[:, None] - est[None, :]) ** 2
        rows, cols = linear_sum_assignment(cost)
        err[rows] = cost[rows, cols]
    return err


def rmse_angles(estimates, truth_deg, miss_penalty_deg=DEFAULT_MISS_PENALTY_DEG):
    """Root of the trial-averaged mean squared angle error, in degrees.

    ``estimates`` is a sequence (one per trial) of estimated angles in
    degrees.
    """
    if len(estimates) == 0:
        raise ValueError("no trials")
    per_trial = [np.mean(match_errors(e, truth_deg, miss_penalty_deg)) for e in estimates]
    return float(np.sqrt(np.mean(per_trial)))


def max_glr(Y, X, array: ArrayModel, angles):
    """Largest single-target GLR over the search grid (the ROC statistic)."""
    return float(np.max(glr(Y, X, array, np.asarray(angles, dtype=float))))


def roc_curve(stats_present, stats_absent, thresholds):
    """Exceedance frequencies ``(P_FA, P_D)`` for every threshold.

    A detection is declared when the statistic strictly exceeds the
    threshold, so both curves are non-increasing in the threshold.
    """
    h1 = np.sort(np.asarray(stats_present, dtype=float))
    h0 = np.sort(np.asarray(stats_absent, dtype=float))
    if h1.size == 0 or h0.size == 0:
        raise ValueError("both hypothesis ensembles must be non-empty")
    thr = np.asarray(thresholds, dtype=float)
    pd = (h1.size - np.searchsorted(h1, thr, side="right")) / h1.size
    pfa = (h0.size - np.searchsorted(h0, thr, side="right")) / h0.size
    return pfa, pd


def pd_at_pfa(stats_present, stats_absent, pfa):
    """Detection rate at the smallest threshold whose false-alarm rate is ``<= pfa``."""
    h0 = np.sort(np.asarray(stats_absent, dtype=float))
    candidates = np.concatenate([[0.0], h0])
    p_fa, p_d = roc_curve(stats_present, stats_absent, candidates)
    idx = np.flatnonzero(p_fa <= pfa)[0]
    return float(p_d[idx])


def q_function(x):
    """Gaussian tail probability ``Q(x) = erfc(x / sqrt 2) / 2``."""
    return 0.5 * erfc(np.asarray(x, dtype=float) / np.sqrt(2.0))


def psk_union_bound(margin, sigma):
    """Upper bound ``2 Q(sqrt(2) beta / sigma)`` on the symbol error rate."""
    return float(2.0 * q_function(np.sqrt(2.0) * margin / sigma))


@dataclass
class SerResult:
    per_user: np.ndarray
    average: float
    errors: np.ndarray  # error counts per user
    trials: int

    @property
    def std_error(self):
        """Standard error of ``average`` (binomial, users pooled)."""
        n = self.trials * self.per_user.size
        p = self.average
        return float(np.sqrt(max(p * (1.0 - p), 0.0) / n)) if n else 0.0


def ser_monte_carlo(precoded, symbol_table, channels, noise_power, trials, seed=None, order=4, batch=20000):
    """Symbol error rate of a precoded symbol-vector map over AWGN.

    Parameters
    ----------
    precoded : ndarray, shape (S, M)
        Transmit vector for every row of ``symbol_table``.
    symbol_table : ndarray, shape (S, K_u)
        PSK symbol vectors.
    channels : ndarray, shape (K_u, M)
    noise_power : float or array_like
        Noise variance ``sigma_k^2`` per user.
    trials : int
        Number of transmitted symbol vectors (drawn uniformly from the table).
    """
    Xt = np.asarray(precoded, dtype=complex)
    table = np.asarray(symbol_table)
    H = np.atleast_2d(np.asarray(channels, dtype=complex))
    K = H.shape[0]
    if Xt.shape[0] != table.shape[0]:
        raise ValueError("one transmit vector is needed per symbol vector")
    sent_idx = symbol_indices(table, order)  # (S, K)
    noise = np.broadcast_to(np.asarray(noise_power, dtype=float), (K,))
    clean = Xt @ H.conj().T  # (S, K): h_k^H x
    rng = np.random.default_rng(seed)
    errors = np.zeros(K, dtype=np.int64)
    done = 0
    while done < trials:
        n = min(batch, trials - done)
        pick = rng.integers(0, table.shape[0], size=n)
        r = clean[pick] + complex_noise(rng, (n, K), 1.0) * np.sqrt(noise)
        errors += np.sum(psk_decide(r, order) != sent_idx[pick], axis=0)
        done += n
    per_user = errors / max(trials, 1)
    return SerResult(per_user=per_user, average=float(per_user.mean()) if K else 0.0, errors=errors, trials=trials)
