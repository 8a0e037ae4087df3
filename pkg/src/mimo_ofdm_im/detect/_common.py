from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..exceptions import InputSizeError

# Floor used in place of a zero noise variance so log-domain metrics stay finite.
N0_FLOOR = 1e-30


@dataclass
class SubblockObservation:
    """Received vectors and channel matrices for a batch of subblocks.

    ``y`` is ``(B, N, R)`` and ``h`` is ``(B, N, R, T)``; ``h`` may be a
    corrupted estimate, in which case every detector simply uses it in its
    decision metric.
    """

    y: np.ndarray
    h: np.ndarray
    n0: float

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.complex128)
        self.h = np.asarray(self.h, dtype=np.complex128)
        if self.y.ndim != 3 or self.h.ndim != 4 or self.h.shape[:3] != self.y.shape:
            raise InputSizeError(
                f"inconsistent observation shapes y{self.y.shape}, h{self.h.shape}; "
                "expected (B, N, R) and (B, N, R, T)"
            )
        if self.n0 < 0:
            raise ValueError("noise variance must be non-negative")

    @property
    def n_tx(self) -> int:
        return self.h.shape[-1]

    @property
    def n_rx(self) -> int:
        return self.h.shape[-2]


@dataclass
class DetectionResult:
    """Per-antenna decisions for a batch of subblocks.

    ``subblocks`` is ``(B, T, N)`` and ``bits`` ``(B, T, p)``. ``llr`` holds
    the per-subcarrier activity LLRs for the LLR detectors; ``illegal`` marks
    subblocks whose LLR-selected pattern had no label and was clamped.
    """

    subblocks: np.ndarray
    bits: np.ndarray
    llr: np.ndarray | None = None
    illegal: np.ndarray | None = None

    @property
    def illegal_count(self) -> int:
        return 0 if self.illegal is None else int(np.count_nonzero(self.illegal))


def symbol_alphabet(points: np.ndarray) -> np.ndarray:
    """Per-antenna value set ``[0, s_0, ..., s_{M-1}]``."""
    return np.concatenate([[0.0 + 0j], points])


def vector_digits(n_values: int, n_tx: int) -> np.ndarray:
    """``(n_values**T, T)`` digits of every symbol vector, antenna 0 most significant."""
    j = np.arange(n_values ** n_tx)
    powers = n_values ** np.arange(n_tx - 1, -1, -1)
    return (j[:, None] // powers) % n_values


def distances_to_vectors(y, h, vectors, chunk: int = 1 << 22):
    """``||y - H s||^2`` for every candidate vector ``s``.

    ``y`` ``(..., R)``, ``h`` ``(..., R, T)`` and ``vectors`` ``(J, T)``;
    returns ``(..., J)``.
    """
    lead = y.shape[:-1]
    yf = y.reshape(-1, y.shape[-1])
    hf = h.reshape((-1,) + h.shape[-2:])
    j = vectors.shape[0]
    out = np.empty((yf.shape[0], j))
    step = max(1, chunk // max(1, j * y.shape[-1]))
    for a in range(0, yf.shape[0], step):
        pred = np.einsum("brt,jt->bjr", hf[a:a + step], vectors)
        diff = yf[a:a + step, None, :] - pred
        out[a:a + step] = (diff.real ** 2 + diff.imag ** 2).sum(axis=-1)
    return out.reshape(lead + (j,))


def gather_sum(table: np.ndarray, index: np.ndarray) -> np.ndarray:
    """``out[..., c] = sum_n table[..., n, index[c, n]]``.

    ``table`` is ``(..., N, V)`` and ``index`` ``(C, N)``.
    """
    n = index.shape[1]
    out = table[..., 0, :][..., index[:, 0]]
    for k in range(1, n):
        out = out + table[..., k, :][..., index[:, k]]
    return out
