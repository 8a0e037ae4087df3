"""
Frequency-selective Rayleigh MIMO channels, AWGN and imperfect CSI.

Tap arrays are shaped ``(R, T, L)`` and frequency responses ``(R, T, N_F)``
in physical subcarrier order. :meth:`ChannelRealization.subcarrier_matrices`
returns the per-subcarrier ``R x T`` matrices in deinterleaved subblock order
``(G, N, R, T)``, which is what the detectors consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError
from .frame import deinterleave

PROFILES = ("uniform", "epa")

# LTE-EPA resampled at 7.68 MHz: one tap per sample (130.2 ns).
EPA_TAP_GAINS = np.array([0.7594, 0.6486, 0.0, 0.0517])
EPA_TAP_DELAYS_NS = np.array([0.0, 130.0, 260.0, 390.0])


def crandn(rng: np.random.Generator, shape) -> np.ndarray:
    """Unit-variance circularly symmetric complex Gaussian samples."""
    z = rng.standard_normal(tuple(np.atleast_1d(shape).tolist()) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def power_delay_profile(profile: str, taps: int) -> np.ndarray:
    """Per-tap variances summing to one."""
    if profile == "uniform":
        if taps < 1:
            raise ConfigError("need at least one channel tap")
        return np.full(taps, 1.0 / taps)
    if profile == "epa":
        if taps != len(EPA_TAP_GAINS):
            raise ConfigError(f"EPA profile has exactly {len(EPA_TAP_GAINS)} taps, got L={taps}")
        p = EPA_TAP_GAINS ** 2
        return p / p.sum()
    raise ConfigError(f"unknown channel profile {profile!r}; expected one of {PROFILES}")


@dataclass(frozen=True)
class ChannelRealization:
    taps: np.ndarray = field(repr=False)   # (R, T, L)
    nfft: int

    @property
    def freq(self) -> np.ndarray:
        """``(R, T, N_F)`` frequency responses in physical order."""
        return np.fft.fft(self.taps, n=self.nfft, axis=-1)

    def subcarrier_matrices(self, n: int) -> np.ndarray:
        """``(G, N, R, T)`` matrices H_n^g after deinterleaving."""
        h = deinterleave(self.freq, n)
        r, t, _ = h.shape
        return np.moveaxis(h, -1, 0).reshape(-1, n, r, t)


def draw_channel(n_tx: int, n_rx: int, taps: int, profile: str, nfft: int,
                 rng: np.random.Generator) -> ChannelRealization:
    """Fresh i.i.d. tap realization for every transmit/receive antenna pair."""
    pdp = power_delay_profile(profile, taps)
    g = crandn(rng, (n_rx, n_tx, len(pdp))) * np.sqrt(pdp)
    return ChannelRealization(g, nfft)


def apply_channel_and_noise(x: np.ndarray, h: np.ndarray, n0: float,
                            rng: np.random.Generator | None = None,
                            unit_noise: np.ndarray | None = None) -> np.ndarray:
    """``y = H x + w`` for stacks of per-subcarrier vectors.

    ``x`` is ``(..., T)`` and ``h`` is ``(..., R, T)``. Noise entries have
    variance ``n0``; pass ``unit_noise`` (unit-variance draws shaped
    ``(..., R)``) to reuse samples, or ``rng`` to draw fresh ones.
    """
    y = np.einsum("...rt,...t->...r", h, x)
    if n0 > 0:
        if unit_noise is None:
            unit_noise = crandn(rng, y.shape)
        y = y + np.sqrt(n0) * unit_noise
    return y


def propagate_time_domain(samples: np.ndarray, taps: np.ndarray) -> np.ndarray:
    """Linear convolution of ``(T, S)`` antenna streams with ``(R, T, L)`` taps.

    Output is ``(R, S)``, truncated to the input length (the channel tail
    spills into the next frame, which is not modeled).
    """
    n_rx, n_tx, _ = taps.shape
    s = samples.shape[-1]
    out = np.zeros((n_rx, s), dtype=np.complex128)
    for r in range(n_rx):
        for t in range(n_tx):
            out[r] += np.convolve(samples[t], taps[r, t])[:s]
    return out


def corrupt_csi(h: np.ndarray, q: float, n0f: float,
                rng: np.random.Generator | None = None,
                unit_error: np.ndarray | None = None) -> np.ndarray:
    """Channel estimate ``H + E`` with error variance ``n0f / q``.

    ``q = inf`` returns ``h`` unchanged.
    """
    if not q > 0:
        raise ConfigError(f"CSI quality Q must be positive, got {q}")
    if np.isinf(q):
        return h
    if unit_error is None:
        unit_error = crandn(rng, h.shape)
    return h + np.sqrt(n0f / q) * unit_error


def snr_to_noise(snr_db: float, config) -> tuple[float, float]:
    """Noise variances ``(N0_T, N0_F)`` for ``SNR = E_b / N0_T`` in dB.

    ``config`` supplies ``energy_per_bit`` and ``sigma_x2`` (see
    :class:`~mimo_ofdm_im.config.SystemConfig`). The frequency-domain
    variance is ``sigma_x2 * N0_T``, i.e. ``(K/N) N0_T`` for index
    modulation and ``N0_T`` when every subcarrier is active.
    """
    n0t = config.energy_per_bit / 10.0 ** (snr_db / 10.0)
    return n0t, config.sigma_x2 * n0t
