"""
OFDM block assembly, G x N block interleaving and CP-OFDM (de)modulation.

All functions operate on the last axis so per-antenna blocks can be stacked
in leading dimensions.
"""

from __future__ import annotations

import numpy as np

from .exceptions import ConfigError


def _groups(nfft: int, n: int) -> int:
    if n <= 0 or nfft % n:
        raise ConfigError(f"FFT size {nfft} is not a multiple of subblock size {n}")
    return nfft // n


def assemble_block(subblocks: np.ndarray) -> np.ndarray:
    """Concatenate ``(..., G, N)`` subblocks into ``(..., G*N)`` OFDM blocks."""
    s = np.asarray(subblocks)
    return s.reshape(s.shape[:-2] + (-1,))


def split_block(block: np.ndarray, n: int) -> np.ndarray:
    """Inverse of :func:`assemble_block`."""
    b = np.asarray(block)
    g = _groups(b.shape[-1], n)
    return b.reshape(b.shape[:-1] + (g, n))


def interleave_indices(nfft: int, n: int) -> np.ndarray:
    """Source positions: ``interleaved[i] = block[idx[i]]``.

    Block position ``g*N + n`` (0-based) is sent on subcarrier ``n*G + g``,
    i.e. the block is written row-wise into a G x N array and read out
    column-wise.
    """
    g = _groups(nfft, n)
    return np.arange(nfft).reshape(g, n).T.reshape(-1)


def interleave(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x)
    return x[..., interleave_indices(x.shape[-1], n)]


def deinterleave(x: np.ndarray, n: int) -> np.ndarray:
    x = np.asarray(x)
    out = np.empty_like(x)
    out[..., interleave_indices(x.shape[-1], n)] = x
    return out


def ofdm_scale(nfft: int, sigma_x2: float) -> float:
    """IFFT gain giving ``E||q||^2 = nfft`` for per-subcarrier energy ``sigma_x2``."""
    return float(np.sqrt(nfft / sigma_x2))


def ofdm_modulate(x: np.ndarray, cp_len: int, sigma_x2: float = 1.0) -> np.ndarray:
    """Frequency block -> time samples with a cyclic prefix of ``cp_len``.

    Parameters
    ----------
    x : ndarray
        Interleaved frequency-domain block(s), subcarriers on the last axis.
    cp_len : int
    sigma_x2 : float
        Average energy per subcarrier of ``x`` (``K/N`` for index modulation),
        used so that the time samples have unit average energy.
    """
    x = np.asarray(x)
    nfft = x.shape[-1]
    if not 0 <= cp_len <= nfft:
        raise ConfigError(f"cyclic prefix {cp_len} must lie in [0, {nfft}]")
    q = np.fft.ifft(x, axis=-1) * ofdm_scale(nfft, sigma_x2)
    return np.concatenate([q[..., nfft - cp_len:], q], axis=-1)


def ofdm_demodulate(samples: np.ndarray, cp_len: int, sigma_x2: float = 1.0) -> np.ndarray:
    """Strip the CP and return to the frequency domain; inverse of modulate."""
    samples = np.asarray(samples)
    body = samples[..., cp_len:]
    return np.fft.fft(body, axis=-1) / ofdm_scale(body.shape[-1], sigma_x2)
