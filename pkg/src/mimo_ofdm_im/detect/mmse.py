"""MMSE-filter based detectors: simple MMSE, MMSE-LLR and MMSE-LLR-OSIC."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ..exceptions import NumericalError
from ..index_codec import SubblockCodec
from ._common import (
    N0_FLOOR,
    DetectionResult,
    SubblockObservation,
    gather_sum,
    symbol_alphabet,
)

COND_LIMIT = 1e12


@dataclass
class MmseStats:
    """Filter rows and post-filter statistics per subcarrier and antenna.

    ``w`` is ``(..., T, R)``; ``gain`` (the effective gain on the wanted
    symbol) and ``var`` (interference-plus-noise variance) are ``(..., T)``.
    """

    w: np.ndarray
    gain: np.ndarray
    var: np.ndarray
    rho: float


def _hermitian(a):
    return np.conj(np.swapaxes(a, -1, -2))


def regularized_gram(h, rho):
    t = h.shape[-1]
    return _hermitian(h) @ h + np.eye(t) / rho


def _check_conditioning(h, a):
    # Columns already cancelled are decoupled from the rest; replace their
    # 1/rho diagonal by 1 so they do not dominate the condition number.
    dead = np.all(h == 0, axis=-2)
    a = a + np.einsum("...t,tu->...tu", dead.astype(float), np.eye(h.shape[-1]))
    ev = np.linalg.eigvalsh(a)
    if np.any(ev[..., -1] > COND_LIMIT * ev[..., 0]):
        raise NumericalError(f"MMSE regularized matrix condition number exceeds {COND_LIMIT:g}")


def mmse_filter(h, n0: float, sigma_x2: float, check: bool = True) -> MmseStats:
    """MMSE filters ``(H^H H + I/rho)^{-1} H^H`` with ``rho = sigma_x2 / n0``.

    For ``n0 == 0`` the pseudo-inverse is used. The per-antenna variance
    treats the other antennas as uncorrelated interferers of energy
    ``sigma_x2``.
    """
    h = np.asarray(h, dtype=np.complex128)
    if n0 > 0:
        rho = sigma_x2 / n0
        a = regularized_gram(h, rho)
        if check:
            _check_conditioning(h, a)
        w = np.linalg.solve(a, _hermitian(h))
    else:
        rho = np.inf
        w = np.linalg.pinv(h)
    wh = w @ h
    gain = np.real(np.diagonal(wh, axis1=-2, axis2=-1))
    cross = np.abs(wh) ** 2
    interf = sigma_x2 * (cross.sum(axis=-1) - np.diagonal(cross, axis1=-2, axis2=-1))
    var = interf + n0 * (np.abs(w) ** 2).sum(axis=-1)
    return MmseStats(w, gain, var, rho)


def mmse_estimates(stats: MmseStats, y) -> np.ndarray:
    """Filtered outputs rearranged per antenna: ``(B, N, R) -> (B, T, N)``."""
    z = np.einsum("bntr,bnr->bnt", stats.w, y)
    return np.swapaxes(z, 1, 2)


def _per_antenna(a):
    # (B, N, T) -> (B, T, N)
    return np.swapaxes(a, 1, 2)


def mmse_simple_detect(stats: MmseStats, xhat, codec: SubblockCodec) -> DetectionResult:
    """Per-antenna minimum of ``sum_n |xhat(n) - gain_n x(n)|^2 / var_n``."""
    gain = _per_antenna(stats.gain)[..., None]
    var = np.maximum(_per_antenna(stats.var), N0_FLOOR)[..., None]
    values = symbol_alphabet(codec.constellation.points)
    d = np.abs(xhat[..., None] - gain * values) ** 2 / var     # (B, T, N, M+1)
    best = np.argmin(gather_sum(d, codec.value_index), axis=-1)
    return DetectionResult(codec.codebook[best], codec.codebook_bits[best])


def activity_llr(xhat, gain, var, points) -> np.ndarray:
    """Log-likelihood ratio of "active" versus "inactive" for each subcarrier."""
    var = np.maximum(var, N0_FLOOR)
    d = np.abs(xhat[..., None] - gain[..., None] * points) ** 2
    return logsumexp(-d / var[..., None], axis=-1) + np.abs(xhat) ** 2 / var


def llr_demap(xhat, gain, var, codec: SubblockCodec) -> DetectionResult:
    """Index and symbol decisions from activity LLRs.

    Arrays are ``(B, T, N)``. In table mode the look-up row with the largest
    LLR sum wins; in combinatorial mode the K largest LLRs are taken, and a
    pattern whose rank has no label is clamped to the last labelled word.
    """
    points = codec.constellation.points
    llr = activity_llr(xhat, gain, var, points)
    sym = np.argmin(np.abs(xhat[..., None] - gain[..., None] * points) ** 2, axis=-1)
    illegal = None
    if codec.mode == "table":
        words = np.argmax(llr @ codec.index.masks.T.astype(float), axis=-1)
    else:
        top = np.argsort(-llr, axis=-1, kind="stable")[..., : codec.k]
        mask = np.zeros(llr.shape, dtype=bool)
        np.put_along_axis(mask, top, True, axis=-1)
        words = codec.index.words_of_masks(mask)
        illegal = words < 0
        words = np.where(illegal, codec.index.n_patterns - 1, words)
    pos = codec.index.patterns[words]
    sym_active = np.take_along_axis(sym, pos, axis=-1)
    return DetectionResult(
        codec.assemble(words, sym_active),
        codec.labels(words, sym_active),
        llr=llr,
        illegal=illegal,
    )


def mmse_llr_detect(stats: MmseStats, xhat, codec: SubblockCodec) -> DetectionResult:
    return llr_demap(xhat, _per_antenna(stats.gain), _per_antenna(stats.var), codec)


def osic_ordering_metric(h, rho) -> np.ndarray:
    """``max_n ||((G_n)^+)_{t*}||^2`` per antenna, shape ``(B, T)``.

    With ``G_n = [H_n; I/sqrt(rho)]`` the squared row norms of the
    pseudo-inverse equal the diagonal of ``(H_n^H H_n + I/rho)^{-1}``.
    """
    inv = np.linalg.inv(regularized_gram(h, rho))
    return np.real(np.diagonal(inv, axis1=-2, axis2=-1)).max(axis=1)


def mmse_llr_osic_detect(obs: SubblockObservation, codec: SubblockCodec,
                         sigma_x2: float) -> DetectionResult:
    """Ordered successive interference cancellation around MMSE-LLR demapping.

    At every stage the remaining antenna with the smallest ordering metric
    is detected, its decided subblock is subtracted from the received
    vectors and its channel column is zeroed; filters and ordering are then
    recomputed.
    """
    y = obs.y.copy()
    h = obs.h.copy()
    b, n, _, t = h.shape
    n0 = obs.n0
    rho = sigma_x2 / max(n0, N0_FLOOR)
    rows = np.arange(b)
    done = np.zeros((b, t), dtype=bool)
    subblocks = np.zeros((b, t, n), dtype=np.complex128)
    bits = np.zeros((b, t, codec.p), dtype=np.int8)
    llr = np.zeros((b, t, n))
    illegal = np.zeros((b, t), dtype=bool)

    for _ in range(t):
        gamma = np.where(done, np.inf, osic_ordering_metric(h, rho))
        sel = np.argmin(gamma, axis=1)
        stats = mmse_filter(h, n0, sigma_x2, check=False)
        w_sel = stats.w[rows, :, sel]                    # (B, N, R)
        xhat = np.einsum("bnr,bnr->bn", w_sel, y)
        gain = stats.gain[rows, :, sel]
        var = stats.var[rows, :, sel]
        res = llr_demap(xhat[:, None], gain[:, None], var[:, None], codec)
        dec = res.subblocks[:, 0]
        subblocks[rows, sel] = dec
        bits[rows, sel] = res.bits[:, 0]
        llr[rows, sel] = res.llr[:, 0]
        if res.illegal is not None:
            illegal[rows, sel] = res.illegal[:, 0]
        col = h[rows, :, :, sel]                         # (B, N, R)
        y -= col * dec[..., None]
        h[rows, :, :, sel] = 0
        done[rows, sel] = True

    return DetectionResult(subblocks, bits, llr=llr,
                           illegal=illegal if codec.mode != "table" else None)
