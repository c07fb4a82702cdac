"""Array model, beampatterns and the coupled quartic objective.

The beampattern-matching cost with the scale factor eliminated reads

.. math::

    f(x) = \\sum_l |x^H A_l x|^2

where every :math:`A_l` is Hermitian.  ``build_coupling`` assembles the
:math:`A_l` together with :math:`B = \\sum_l vec(A_l) vec(A_l)^H` (kept in
factored form) and its top eigenvalue.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateGridError(ValueError):
    """Raised when the desired pattern is identically zero on the grid."""


def dbm_to_watts(dbm):
    """Convert dBm to watts."""
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def db_to_linear(db):
    return 10.0 ** (np.asarray(db, dtype=float) / 10.0)


@dataclass(frozen=True)
class ArrayModel:
    """Uniform linear array.

    Parameters
    ----------
    num_antennas : int
        Number of elements ``M``.
    spacing_ratio : float
        Element spacing over wavelength.
    """

    num_antennas: int
    spacing_ratio: float = 0.5

    def __post_init__(self):
        if self.num_antennas < 1:
            raise ValueError("num_antennas must be >= 1")
        if not self.spacing_ratio > 0:
            raise ValueError("spacing_ratio must be positive")


def steering_vector(array: ArrayModel, theta):
    """Transmit steering vector(s).

    ``theta`` may be a scalar (returns shape ``(M,)``) or an array of angles
    in radians (returns shape ``(len(theta), M)``, one vector per row).
    """
    m = np.arange(array.num_antennas)
    theta = np.asarray(theta, dtype=float)
    phase = 2.0 * np.pi * array.spacing_ratio * np.multiply.outer(np.sin(theta), m)
    return np.exp(1j * phase)


def instantaneous_beampattern(x, array: ArrayModel, theta):
    """Radiated power ``|a(theta)^H x|^2`` for one or many angles."""
    a = steering_vector(array, theta)
    return np.abs(a.conj() @ np.asarray(x)) ** 2


@dataclass(frozen=True)
class BeampatternGrid:
    """Sampled desired beampattern (angles in radians, increasing)."""

    angles: np.ndarray
    desired: np.ndarray

    def __post_init__(self):
        angles = np.asarray(self.angles, dtype=float)
        desired = np.asarray(self.desired, dtype=float)
        if angles.shape != desired.shape or angles.ndim != 1:
            raise ValueError("angles and desired must be 1-D and equally sized")
        if angles.size > 1 and np.any(np.diff(angles) <= 0):
            raise ValueError("angles must be strictly increasing")
        if np.any(desired < 0):
            raise ValueError("desired pattern must be nonnegative")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "desired", desired)

    @property
    def size(self):
        return self.angles.size

    @property
    def degrees(self):
        return np.rad2deg(self.angles)


def angle_grid(resolution_deg=1.0, lo_deg=-90.0, hi_deg=90.0):
    """Uniform angle grid in radians with both endpoints included."""
    n = int(round((hi_deg - lo_deg) / resolution_deg)) + 1
    return np.deg2rad(lo_deg + resolution_deg * np.arange(n))


def ideal_beampattern(targets, beam_width, angles) -> BeampatternGrid:
    """Rectangular beams of width ``beam_width`` centred on each target.

    All angles are in radians.  A small slack absorbs the rounding that
    comes from converting degree grids to radians, so that window edges
    falling exactly on grid points are included.
    """
    if not beam_width > 0:
        raise ValueError("beam_width must be positive")
    angles = np.asarray(angles, dtype=float)
    d = np.zeros_like(angles)
    half = beam_width / 2.0 + 1e-9
    for t in np.atleast_1d(np.asarray(targets, dtype=float)):
        d[np.abs(angles - t) <= half] = 1.0
    return BeampatternGrid(angles, d)


def optimal_scale(x, grid: BeampatternGrid, array: ArrayModel):
    """Least-squares scale ``alpha`` between the desired and obtained pattern."""
    denom = np.sum(grid.desired**2)
    if denom <= 0:
        raise DegenerateGridError("sum of squared desired pattern is zero")
    p = instantaneous_beampattern(x, array, grid.angles)
    return float(np.dot(grid.desired, p) / denom)


def pattern_mismatch(alpha, x, grid: BeampatternGrid, array: ArrayModel):
    """Squared-error cost between ``alpha * d`` and the obtained pattern."""
    p = instantaneous_beampattern(x, array, grid.angles)
    return float(np.mean(np.abs(alpha * grid.desired - p) ** 2))


@dataclass(frozen=True)
class CouplingSet:
    """Objective matrices of the quartic cost.

    Attributes
    ----------
    A : ndarray, shape (L, M, M)
        Hermitian matrices ``A_l``.
    lambda_B : float
        Largest eigenvalue of ``B = sum_l vec(A_l) vec(A_l)^H``.
    """

    A: np.ndarray
    lambda_B: float
    weighted_sum: np.ndarray = field(repr=False)

    @property
    def num_antennas(self):
        return self.A.shape[1]

    @property
    def B(self):
        """Dense ``B`` (``M^2 x M^2``); only meant for checks on small arrays."""
        V = self.vec_stack().T
        return V @ V.conj().T

    def vec_stack(self):
        """Rows are ``vec(A_l)`` in column-major order."""
        L, M, _ = self.A.shape
        return np.transpose(self.A, (0, 2, 1)).reshape(L, M * M)

    def quadratic_forms(self, x):
        """Real values ``x^H A_l x`` for every ``l``."""
        x = np.asarray(x)
        return np.einsum("i,lij,j->l", x.conj(), self.A, x).real

    def objective(self, x):
        return float(np.sum(self.quadratic_forms(x) ** 2))

    def gradient(self, x):
        """Euclidean (Wirtinger-style) gradient ``4 sum_l (x^H A_l x) A_l x``."""
        q = self.quadratic_forms(x)
        return 4.0 * np.einsum("l,lij,j->i", q, self.A, x)


def _top_eigenvalue(apply, dim, rtol=1e-10, max_iter=10000, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = apply(v)
        lam_new = float(np.real(np.vdot(v, w)))
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v = w / nw
        if abs(lam_new - lam) <= rtol * abs(lam_new):
            return lam_new
        lam = lam_new
    return lam


def build_coupling(grid: BeampatternGrid, array: ArrayModel) -> CouplingSet:
    """Assemble the ``A_l`` matrices and the top eigenvalue of ``B``."""
    d = grid.desired
    denom = np.sum(d**2)
    if denom <= 0:
        raise DegenerateGridError("sum of squared desired pattern is zero")
    L = grid.size
    a = steering_vector(array, grid.angles)  # (L, M)
    A_theta = np.einsum("li,lj->lij", a, a.conj())
    S = np.einsum("l,lij->ij", d, A_theta)
    A = (d[:, None, None] * S[None] / denom - A_theta) / np.sqrt(L)
    A = 0.5 * (A + np.conj(np.transpose(A, (0, 2, 1))))

    # B = V V^H with V = [vec(A_1) ... vec(A_L)]; apply it without forming it.
    V = np.transpose(A, (0, 2, 1)).reshape(L, -1).T
    lam = _top_eigenvalue(lambda u: V @ (V.conj().T @ u), V.shape[0])
    return CouplingSet(A=A, lambda_B=max(lam, 0.0), weighted_sum=S)


@dataclass(frozen=True)
class DfrcScenario:
    """Everything the solvers and evaluators need about one deployment.

    Powers are in watts and angles in radians.
    """

    array: ArrayModel
    channels: np.ndarray  # (K_u, M)
    user_noise: np.ndarray  # sigma_k^2 per user
    radar_noise: float
    total_power: float
    grid: BeampatternGrid
    target_angles: np.ndarray
    target_amplitudes: np.ndarray
    constellation_order: int = 4

    def __post_init__(self):
        H = np.atleast_2d(np.asarray(self.channels, dtype=complex))
        if H.size == 0:
            H = np.zeros((0, self.array.num_antennas), dtype=complex)
        if H.shape[1] != self.array.num_antennas:
            raise ValueError("channel length must equal the number of antennas")
        if H.shape[0] > self.array.num_antennas:
            raise ValueError("more users than antennas")
        noise = np.broadcast_to(np.asarray(self.user_noise, dtype=float), (H.shape[0],)).copy()
        if np.any(noise <= 0) or self.radar_noise <= 0 or self.total_power <= 0:
            raise ValueError("all powers must be positive")
        object.__setattr__(self, "channels", H)
        object.__setattr__(self, "user_noise", noise)
        object.__setattr__(self, "target_angles", np.atleast_1d(np.asarray(self.target_angles, dtype=float)))
        amps = np.broadcast_to(np.asarray(self.target_amplitudes, dtype=complex), self.target_angles.shape)
        object.__setattr__(self, "target_amplitudes", amps.copy())

    @property
    def num_antennas(self):
        return self.array.num_antennas

    @property
    def num_users(self):
        return self.channels.shape[0]

    @property
    def amplitude(self):
        """Per-antenna modulus ``sqrt(P_tot / M)``."""
        return float(np.sqrt(self.total_power / self.num_antennas))
