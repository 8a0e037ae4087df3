"""
Unit-energy M-ary constellations with Gray labels.

Supported orders are BPSK, QPSK, rectangular 8-QAM (4x2 grid), 16-QAM and
64-QAM. Point ``m`` of a constellation carries the bit label given by the
binary expansion of ``m`` (MSB first), so a group of ``log2(M)`` bits maps to
``points[int(bits)]``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, InputSizeError

MODULATIONS = {"bpsk": 2, "qpsk": 4, "qam8": 8, "qam16": 16, "qam64": 64}


def bits_to_int(bits: np.ndarray) -> np.ndarray:
    """Integer value of the trailing-axis bit groups, MSB first."""
    bits = np.asarray(bits, dtype=np.int64)
    n = bits.shape[-1]
    weights = 1 << np.arange(n - 1, -1, -1, dtype=np.int64)
    return bits @ weights


def int_to_bits(values, n_bits: int) -> np.ndarray:
    """Inverse of :func:`bits_to_int`; appends a trailing axis of ``n_bits``."""
    values = np.asarray(values, dtype=np.int64)
    shifts = np.arange(n_bits - 1, -1, -1, dtype=np.int64)
    return ((values[..., None] >> shifts) & 1).astype(np.int8)


def _gray_pam(n_bits: int) -> np.ndarray:
    # Amplitude for each label. Level i (from the top) gets label i ^ (i >> 1),
    # so label 0 sits at the largest positive amplitude, as in BPSK 0 -> +1.
    size = 1 << n_bits
    i = np.arange(size)
    levels = (size - 1) - 2 * i
    amp = np.empty(size)
    amp[i ^ (i >> 1)] = levels
    return amp


def _qam_points(n_i: int, n_q: int) -> np.ndarray:
    # First n_i bits of a label drive the in-phase rail, the rest quadrature.
    amp_i = _gray_pam(n_i)
    amp_q = _gray_pam(n_q) if n_q else np.zeros(1)
    labels = np.arange(1 << (n_i + n_q))
    pts = amp_i[labels >> n_q] + 1j * amp_q[labels & ((1 << n_q) - 1)]
    return pts / np.sqrt(np.mean(np.abs(pts) ** 2))


@dataclass(frozen=True)
class Constellation:
    """Immutable constellation; ``points[m]`` is labelled by ``m`` in binary."""

    name: str
    order: int
    points: np.ndarray = field(repr=False)

    @property
    def bits_per_symbol(self) -> int:
        return self.order.bit_length() - 1

    @property
    def labels(self) -> np.ndarray:
        """``(M, log2 M)`` bit matrix; row ``m`` is the label of point ``m``."""
        return int_to_bits(np.arange(self.order), self.bits_per_symbol)

    @property
    def min_distance(self) -> float:
        d = np.abs(self.points[:, None] - self.points[None, :])
        return float(d[d > 0].min())

    def map(self, bits) -> np.ndarray:
        return map_symbols(bits, self)

    def nearest(self, z) -> np.ndarray:
        """Index of the closest point for every entry of ``z`` (ties -> lowest)."""
        z = np.asarray(z)
        d = np.abs(z[..., None] - self.points) ** 2
        return np.argmin(d, axis=-1)


def make_constellation(name: str) -> Constellation:
    """Build one of the supported constellations by config name."""
    key = name.lower()
    if key not in MODULATIONS:
        raise ConfigError(
            f"unknown modulation {name!r}; expected one of {sorted(MODULATIONS)}"
        )
    order = MODULATIONS[key]
    if order == 2:
        points = np.array([1.0 + 0j, -1.0 + 0j])
    elif order == 8:
        points = _qam_points(2, 1)
    else:
        half = (order.bit_length() - 1) // 2
        points = _qam_points(half, half)
    points = points.astype(np.complex128)
    points.setflags(write=False)
    return Constellation(key, order, points)


def map_symbols(bits, c: Constellation) -> np.ndarray:
    """Map a bit sequence (or trailing axis) onto constellation symbols.

    Parameters
    ----------
    bits : array_like of {0, 1}
        Bits along the last axis; its length must be a multiple of
        ``log2(M)``.
    c : Constellation

    Returns
    -------
    numpy.ndarray
        Complex symbols, last axis shortened by a factor ``log2(M)``.
    """
    bits = np.asarray(bits, dtype=np.int64)
    k = c.bits_per_symbol
    if bits.shape[-1] % k:
        raise InputSizeError(
            f"bit length {bits.shape[-1]} is not a multiple of log2(M)={k}"
        )
    groups = bits.reshape(bits.shape[:-1] + (-1, k))
    return c.points[bits_to_int(groups)]


def demap_symbol(z: complex, c: Constellation):
    """Nearest constellation point and its bit label.

    Returns ``(symbol, bits)``; among equidistant points the one with the
    lowest index wins.
    """
    m = int(c.nearest(z))
    return c.points[m], c.labels[m]
