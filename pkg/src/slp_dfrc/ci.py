"""Constructive-interference QoS constraints for PSK symbol vectors."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

DEFAULT_ENUMERATION_CAP = 65536


class EnumerationCapError(ValueError):
    pass


def psk_constellation(order: int):
    """PSK points ``exp(j(2 pi q + pi) / order)``; QPSK gives ``e^{j pi/4}, ...``."""
    q = np.arange(order)
    return np.exp(1j * (2.0 * np.pi * q + np.pi) / order)


def half_sector(order: int) -> float:
    """Half-width ``pi / order`` of a PSK decision sector."""
    return np.pi / order


def qos_threshold(sigma, phi, sinr):
    """Margin ``sigma * sin(phi) * sqrt(sinr)`` mirroring a linear SINR target."""
    sinr = np.asarray(sinr, dtype=float)
    if np.any(sinr < 0):
        raise ValueError("SINR target must be nonnegative")
    return sigma * np.sin(phi) * np.sqrt(sinr)


def ci_margin(h, x, s, phi):
    """Distance of the noise-free received point to its nearest decision boundary.

    Positive when ``h^H x`` lies inside the decision sector of ``s``.
    """
    z = np.vdot(h, x) * np.exp(-1j * np.angle(s))
    return z.real * np.sin(phi) - abs(z.imag) * np.cos(phi)


@dataclass(frozen=True)
class CiInstance:
    """Linear form ``Re{h_i^H x} >= gamma_i`` of the CI constraints.

    Rows ``2k`` and ``2k + 1`` both come from user ``k`` (0-based), one per
    sector boundary.
    """

    rotated: np.ndarray  # (2 K_u, M)
    thresholds: np.ndarray  # (2 K_u,)
    phi: float

    @property
    def num_constraints(self):
        return self.thresholds.size

    def residuals(self, x):
        """``Re{h_i^H x} - gamma_i``; nonnegative entries mean satisfied."""
        return (self.rotated.conj() @ x).real - self.thresholds

    def max_violation(self, x):
        if self.num_constraints == 0:
            return 0.0
        return float(max(0.0, -np.min(self.residuals(x))))


def build_ci(channels, symbols, margins, order: int = 4) -> CiInstance:
    """Rotate each user's channel into the frame of its symbol.

    Parameters
    ----------
    channels : ndarray, shape (K_u, M)
    symbols : array_like, shape (K_u,)
        Unit-modulus PSK symbols.
    margins : float or array_like
        Required margin ``beta_k`` per user.
    order : int
        Constellation order, fixing ``phi = pi / order``.
    """
    H = np.atleast_2d(np.asarray(channels, dtype=complex))
    s = np.atleast_1d(np.asarray(symbols, dtype=complex))
    K = s.size
    if K == 0:
        M = H.shape[1] if H.ndim == 2 else 0
        return CiInstance(np.zeros((0, M), dtype=complex), np.zeros(0), half_sector(order))
    if not np.allclose(np.abs(s), 1.0):
        raise ValueError("symbols must have unit modulus")
    beta = np.broadcast_to(np.asarray(margins, dtype=float), (K,))
    phi = half_sector(order)
    # row form: h_tilde^H = h^H e^{-j angle s} (sin phi -/+ j cos phi)
    rot = np.exp(-1j * np.angle(s))[:, None] * H.conj()
    upper = rot * (np.sin(phi) - 1j * np.cos(phi))
    lower = rot * (np.sin(phi) + 1j * np.cos(phi))
    rows = np.empty((2 * K, H.shape[1]), dtype=complex)
    rows[0::2] = lower
    rows[1::2] = upper
    # stored as column vectors h_tilde (conjugate of the row form)
    return CiInstance(rows.conj(), np.repeat(beta, 2), phi)


def enumerate_symbol_vectors(num_users: int, order: int, cap: int = DEFAULT_ENUMERATION_CAP):
    """All ``order ** num_users`` PSK symbol vectors in lexicographic order.

    Returns an array of shape ``(order ** num_users, num_users)``.
    """
    total = order**num_users
    if total > cap:
        raise EnumerationCapError(f"{total} symbol vectors exceed the cap of {cap}")
    points = psk_constellation(order)
    idx = np.array(list(itertools.product(range(order), repeat=num_users)), dtype=int)
    return points[idx.reshape(total, num_users)]


def symbol_indices(symbols, order: int):
    """Constellation index of every symbol (inverse of ``psk_constellation``)."""
    ang = np.angle(np.asarray(symbols))
    q = np.round((ang * order - np.pi) / (2.0 * np.pi)) % order
    return q.astype(int)


def psk_decide(r, order: int):
    """Nearest-sector PSK decision; returns constellation indices."""
    ang = np.mod(np.angle(r), 2.0 * np.pi)
    return (np.floor(ang * order / (2.0 * np.pi))).astype(int) % order
