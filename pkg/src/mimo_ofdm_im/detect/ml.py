"""Brute-force ML and near-ML detection of MIMO-OFDM-IM subblocks."""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from scipy.special import logsumexp

from ..exceptions import CapacityError
from ..index_codec import SubblockCodec
from ._common import (
    N0_FLOOR,
    DetectionResult,
    SubblockObservation,
    distances_to_vectors,
    gather_sum,
    symbol_alphabet,
    vector_digits,
)

ML_CODEBOOK_CAP = 1 << 24
ML_FORMS = ("factored", "per_antenna", "stacked")


def joint_size(codec: SubblockCodec, n_tx: int) -> int:
    return codec.size ** n_tx


@lru_cache(maxsize=16)
def _joint_value_table(codec: SubblockCodec, n_tx: int) -> np.ndarray:
    # (C_joint, N) index of the per-subcarrier symbol vector of each joint tuple
    m1 = codec.constellation.order + 1
    vidx = codec.value_index
    table = vidx
    for _ in range(1, n_tx):
        table = (table[:, None, :] * m1 + vidx[None, :, :]).reshape(-1, codec.n)
    return table


def joint_codebook(codec: SubblockCodec, n_tx: int) -> np.ndarray:
    """``(C_joint, T, N)`` subblock tuples; tuple ``c`` uses per-antenna entries of
    ``c`` written in base ``codec.size`` (antenna 0 most significant)."""
    _check_cap(codec, n_tx)
    idx = vector_digits(codec.size, n_tx)
    return codec.codebook[idx]


def _check_cap(codec, n_tx):
    size = joint_size(codec, n_tx)
    if size > ML_CODEBOOK_CAP:
        raise CapacityError(
            f"joint ML search over {size} subblock tuples exceeds cap {ML_CODEBOOK_CAP}; "
            "reduce T, K or M or use near-ML / MMSE detection"
        )


def _result_from_joint(index, codec, n_tx):
    per_ant = (index[:, None] // codec.size ** np.arange(n_tx - 1, -1, -1)) % codec.size
    return DetectionResult(codec.codebook[per_ant], codec.codebook_bits[per_ant])


def ml_metrics(obs: SubblockObservation, codec: SubblockCodec,
               form: str = "factored", chunk: int = 1 << 22) -> np.ndarray:
    """ML metric of every joint subblock tuple, ``(B, C_joint)``.

    ``factored`` sums per-subcarrier distances looked up from the
    ``(M+1)^T`` symbol vectors; ``per_antenna`` evaluates
    ``sum_r ||y_r - sum_t diag(x_t) h_rt||^2`` literally; ``stacked`` uses the
    block-diagonal ``RN x TN`` channel of the whole subblock.
    """
    t = obs.n_tx
    _check_cap(codec, t)
    if form == "factored":
        values = symbol_alphabet(codec.constellation.points)
        vectors = values[vector_digits(len(values), t)]
        d = distances_to_vectors(obs.y, obs.h, vectors)
        return gather_sum(d, _joint_value_table(codec, t))

    book = joint_codebook(codec, t)                      # (C, T, N)
    b, n, r = obs.y.shape
    step = max(1, chunk // (book.shape[0] * n * r))
    out = np.empty((b, book.shape[0]))
    if form == "per_antenna":
        y_r = np.moveaxis(obs.y, 1, 2)                 # (B, R, N)
        h_rt = np.moveaxis(obs.h, 1, 3)                # (B, R, T, N)
        for a in range(0, b, step):
            pred = np.einsum("ctn,brtn->bcrn", book, h_rt[a:a + step])
            diff = y_r[a:a + step, None] - pred
            out[a:a + step] = (np.abs(diff) ** 2).sum(axis=(2, 3))
    elif form == "stacked":
        hbig = np.zeros((b, n * r, n * t), dtype=np.complex128)
        for k in range(n):
            hbig[:, k * r:(k + 1) * r, k * t:(k + 1) * t] = obs.h[:, k]
        xs = np.swapaxes(book, 1, 2).reshape(book.shape[0], n * t)
        ys = obs.y.reshape(b, n * r)
        for a in range(0, b, step):
            diff = ys[a:a + step, None, :] - np.einsum("bij,cj->bci", hbig[a:a + step], xs)
            out[a:a + step] = (np.abs(diff) ** 2).sum(axis=-1)
    else:
        raise ValueError(f"unknown ML form {form!r}; expected one of {ML_FORMS}")
    return out


def ml_detect(obs: SubblockObservation, codec: SubblockCodec,
              form: str = "factored") -> DetectionResult:
    """Joint minimum-distance search over all ``(C M^K)^T`` subblock tuples.

    Ties go to the lowest joint codebook index.
    """
    metric = ml_metrics(obs, codec, form)
    return _result_from_joint(np.argmin(metric, axis=1), codec, obs.n_tx)


def value_priors(codec: SubblockCodec) -> np.ndarray:
    """Per-antenna prior of each value in ``[0, s_0, ..., s_{M-1}]``."""
    act = codec.k / codec.n
    m = codec.constellation.order
    return np.concatenate([[1.0 - act], np.full(m, act / m)])


def symbol_vector_priors(codec: SubblockCodec, n_tx: int) -> np.ndarray:
    """Prior of each of the ``(M+1)^T`` per-subcarrier vectors (product form)."""
    pv = value_priors(codec)
    return np.prod(pv[vector_digits(len(pv), n_tx)], axis=1)


def near_ml_posteriors(obs: SubblockObservation, codec: SubblockCodec) -> np.ndarray:
    """Log posteriors ``ln P(xbar_n | ybar_n)``, shape ``(B, N, (M+1)^T)``.

    Each subcarrier is normalized over the ``(M+1)^T`` candidate vectors, so
    a subblock costs ``N (M+1)^T`` likelihood evaluations.
    """
    t = obs.n_tx
    values = symbol_alphabet(codec.constellation.points)
    digits = vector_digits(len(values), t)
    d = distances_to_vectors(obs.y, obs.h, values[digits])
    with np.errstate(divide="ignore"):
        log_prior = np.log(symbol_vector_priors(codec, t))
    logp = -d / max(obs.n0, N0_FLOOR) + log_prior
    return logp - logsumexp(logp, axis=-1, keepdims=True)


def near_ml_scores(obs: SubblockObservation, codec: SubblockCodec) -> np.ndarray:
    """``ln P(x_t)`` for every per-antenna codebook entry, ``(B, T, C M^K)``."""
    t = obs.n_tx
    m1 = codec.constellation.order + 1
    logpost = near_ml_posteriors(obs, codec)
    b, n, _ = logpost.shape
    grid = logpost.reshape((b, n) + (m1,) * t)
    marg = np.empty((b, n, t, m1))
    for ant in range(t):
        others = tuple(2 + a for a in range(t) if a != ant)
        marg[:, :, ant] = logsumexp(grid, axis=others) if others else grid
    return gather_sum(marg.transpose(0, 2, 1, 3), codec.value_index)


def near_ml_detect(obs: SubblockObservation, codec: SubblockCodec) -> DetectionResult:
    """Per-antenna argmax of the product of per-subcarrier marginal posteriors."""
    best = np.argmax(near_ml_scores(obs, codec), axis=-1)
    return DetectionResult(codec.codebook[best], codec.codebook_bits[best])
