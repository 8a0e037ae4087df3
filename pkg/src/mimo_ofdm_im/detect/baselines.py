"""
Classical MIMO-OFDM receivers used as references: V-BLAST (ML, MMSE,
MMSE-OSIC) and Alamouti space-time block coding over OFDM symbol pairs.

These work per subcarrier. Inputs carry arbitrary leading dimensions:
``y`` is ``(..., R)`` and ``h`` is ``(..., R, T)``. Outputs are symbol
indices ``(..., T)``.
"""

from __future__ import annotations

import numpy as np

from ..constellation import Constellation
from ..exceptions import ConfigError
from ._common import N0_FLOOR, distances_to_vectors, vector_digits
from .mmse import mmse_filter, regularized_gram

VBLAST_VARIANTS = ("ml", "mmse", "mmse_osic")


def _slice(z, gain, points):
    return np.argmin(np.abs(z[..., None] - gain[..., None] * points) ** 2, axis=-1)


def vblast_detect(y, h, n0: float, c: Constellation, variant: str = "ml") -> np.ndarray:
    """Spatial-multiplexing detection with all subcarriers active.

    ``ml`` searches all ``M^T`` symbol vectors; ``mmse`` slices the unbiased
    MMSE outputs; ``mmse_osic`` detects the stream with the best post-MMSE
    SINR first and cancels it before the next stage.
    """
    y = np.asarray(y, dtype=np.complex128)
    h = np.asarray(h, dtype=np.complex128)
    t = h.shape[-1]
    if variant == "ml":
        digits = vector_digits(c.order, t)
        d = distances_to_vectors(y, h, c.points[digits])
        return digits[np.argmin(d, axis=-1)]
    if variant == "mmse":
        st = mmse_filter(h, n0, 1.0, check=False)
        z = np.einsum("...tr,...r->...t", st.w, y)
        return _slice(z, st.gain, c.points)
    if variant == "mmse_osic":
        return _vblast_osic(y, h, n0, c)
    raise ConfigError(f"unknown V-BLAST variant {variant!r}; expected one of {VBLAST_VARIANTS}")


def _vblast_osic(y, h, n0, c):
    lead = y.shape[:-1]
    y = y.reshape(-1, y.shape[-1]).copy()
    h = h.reshape((-1,) + h.shape[-2:]).copy()
    b, _, t = h.shape
    rows = np.arange(b)
    rho = 1.0 / max(n0, N0_FLOOR)
    done = np.zeros((b, t), dtype=bool)
    out = np.zeros((b, t), dtype=np.int64)
    for _ in range(t):
        err = np.real(np.diagonal(np.linalg.inv(regularized_gram(h, rho)), axis1=-2, axis2=-1))
        sel = np.argmin(np.where(done, np.inf, err), axis=1)
        st = mmse_filter(h, n0, 1.0, check=False)
        z = np.einsum("br,br->b", st.w[rows, sel], y)
        idx = _slice(z, st.gain[rows, sel], c.points)
        out[rows, sel] = idx
        y -= h[rows, :, sel] * c.points[idx][:, None]
        h[rows, :, sel] = 0
        done[rows, sel] = True
    return out.reshape(lead + (t,))


def alamouti_encode(s1, s2):
    """Two-slot Alamouti block with per-antenna power 1/2.

    Returns ``(slot1, slot2)``, each ``(..., 2)`` over transmit antennas.
    """
    a = np.sqrt(0.5)
    s1, s2 = np.asarray(s1), np.asarray(s2)
    return a * np.stack([s1, s2], axis=-1), a * np.stack([-np.conj(s2), np.conj(s1)], axis=-1)


def alamouti_combine(y1, y2, h):
    """Linear Alamouti combining; returns ``(z, gain)``.

    ``z`` is ``(..., 2)`` and equals ``gain * s + noise`` with
    ``gain = ||h||_F^2 / sqrt(2)``.
    """
    h = np.asarray(h)
    if h.shape[-1] != 2:
        raise ConfigError(f"Alamouti coding needs T=2 transmit antennas, got T={h.shape[-1]}")
    h1, h2 = h[..., 0], h[..., 1]
    z1 = (np.conj(h1) * y1 + h2 * np.conj(y2)).sum(axis=-1)
    z2 = (np.conj(h2) * y1 - h1 * np.conj(y2)).sum(axis=-1)
    gain = (np.abs(h) ** 2).sum(axis=(-1, -2)) * np.sqrt(0.5)
    return np.stack([z1, z2], axis=-1), gain


def alamouti_detect(y1, y2, h, c: Constellation) -> np.ndarray:
    """Symbol indices ``(..., 2)`` for the two symbols of each Alamouti block."""
    z, gain = alamouti_combine(y1, y2, h)
    return _slice(z, gain[..., None], c.points)
