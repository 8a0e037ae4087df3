"""
Bit <-> subblock mapping for OFDM index modulation.

A subblock of ``N`` subcarriers carries ``p = p1 + p2`` bits: ``p1 =
floor(log2 C(N, K))`` bits select which ``K`` subcarriers are active and
``p2 = K log2 M`` bits pick the symbols they carry. Active patterns come
either from a fixed look-up table (only ``(N, K)`` = ``(4, 2)`` and
``(4, 3)``) or from the combinatorial number system.

Index patterns exposed by :func:`pattern_encode` / :func:`pattern_decode` are
1-based, increasing tuples. Internally everything is 0-based.
"""

from __future__ import annotations

from functools import cached_property
from math import comb

import numpy as np

from .constellation import Constellation, bits_to_int, int_to_bits
from .exceptions import (
    CapacityError,
    ConfigError,
    DomainError,
    IllegalPatternError,
    InputSizeError,
)

INDEX_MODES = ("table", "combinatorial")

# 1-based active indices, row r is the pattern for the 2-bit word r.
LOOKUP_TABLES = {
    (4, 2): ((1, 3), (2, 4), (1, 4), (2, 3)),
    (4, 3): ((1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)),
}

MAX_SUBBLOCK_N = 16
CODEBOOK_CAP = 1 << 20


def index_bits(n: int, k: int) -> int:
    """``floor(log2(C(n, k)))`` computed exactly on integers."""
    _check_nk(n, k)
    return comb(n, k).bit_length() - 1


def _check_nk(n, k):
    if not (1 <= k <= n):
        raise ConfigError(f"need 1 <= K <= N, got N={n}, K={k}")


def combination_rank(indices) -> int:
    """Rank of a 0-based K-combination, ``sum_k C(c_k, k)`` with c ascending."""
    c = sorted(int(i) for i in indices)
    return sum(comb(ck, k) for k, ck in enumerate(c, start=1))


def combination_unrank(rank: int, n: int, k: int) -> tuple:
    """0-based ascending K-combination of ``range(n)`` with the given rank."""
    _check_nk(n, k)
    if not 0 <= rank < comb(n, k):
        raise DomainError(f"rank {rank} outside [0, C({n},{k}))")
    out = []
    z = rank
    for kk in range(k, 0, -1):
        # Largest c with C(c, kk) <= z.
        c = kk - 1
        while comb(c + 1, kk) <= z:
            c += 1
        out.append(c)
        z -= comb(c, kk)
    return tuple(reversed(out))


class IndexCodec:
    """Mapping between ``p1``-bit words and active-index patterns.

    Parameters
    ----------
    n, k : int
        Subblock size and number of active subcarriers.
    mode : {"table", "combinatorial"}
    """

    def __init__(self, n: int, k: int, mode: str = "combinatorial"):
        _check_nk(n, k)
        if mode not in INDEX_MODES:
            raise ConfigError(f"index mode must be one of {INDEX_MODES}, got {mode!r}")
        if mode == "table" and (n, k) not in LOOKUP_TABLES:
            raise ConfigError(
                f"no look-up table for N={n}, K={k}; use index_mode=combinatorial"
            )
        if n > MAX_SUBBLOCK_N:
            raise ConfigError(f"subblock size N={n} exceeds {MAX_SUBBLOCK_N}")
        self.n, self.k, self.mode = n, k, mode
        self.p1 = index_bits(n, k)
        self.n_patterns = 1 << self.p1

        if mode == "table":
            rows = [tuple(i - 1 for i in row) for row in LOOKUP_TABLES[(n, k)]]
        else:
            rows = [combination_unrank(z, n, k) for z in range(self.n_patterns)]
        patterns = np.array(rows, dtype=np.int64).reshape(self.n_patterns, k)
        patterns.setflags(write=False)
        self.patterns = patterns

        masks = np.zeros((self.n_patterns, n), dtype=bool)
        np.put_along_axis(masks, patterns, True, axis=1)
        masks.setflags(write=False)
        self.masks = masks
        self._mask_weights = 1 << np.arange(n, dtype=np.int64)

    @cached_property
    def _word_of_mask(self) -> np.ndarray:
        # word for every n-bit activity mask, -1 when the mask is not a row
        table = np.full(1 << self.n, -1, dtype=np.int64)
        table[self.masks.astype(np.int64) @ self._mask_weights] = np.arange(
            self.n_patterns
        )
        return table

    @cached_property
    def _rank_of_mask(self) -> np.ndarray:
        # combinatorial rank of every K-subset mask, -1 for other weights
        n, k = self.n, self.k
        table = np.full(1 << n, -1, dtype=np.int64)
        masks = np.arange(1 << n, dtype=np.int64)
        bits = (masks[:, None] >> np.arange(n)) & 1
        sel = bits.sum(axis=1) == k
        # rank = sum over set bits of C(position, order among set bits)
        binom = np.array([[comb(c, j) for j in range(k + 1)] for c in range(n)])
        order = np.cumsum(bits[sel], axis=1) * bits[sel]
        table[sel] = (binom[np.arange(n), np.minimum(order, k)] * bits[sel]).sum(axis=1)
        return table

    def mask_to_int(self, mask) -> np.ndarray:
        return np.asarray(mask, dtype=np.int64) @ self._mask_weights

    def words_of_masks(self, masks) -> np.ndarray:
        """Word for each boolean activity mask (last axis), -1 if illegal."""
        return self._word_of_mask[self.mask_to_int(masks)]

    def ranks_of_masks(self, masks) -> np.ndarray:
        """Combinatorial rank for each K-subset mask."""
        return self._rank_of_mask[self.mask_to_int(masks)]

    def encode(self, word: int) -> tuple:
        if not 0 <= word < self.n_patterns:
            raise DomainError(f"word {word} outside [0, 2^{self.p1})")
        return tuple(int(i) + 1 for i in self.patterns[word])

    def decode(self, indices) -> int:
        idx = [int(i) - 1 for i in indices]
        if len(set(idx)) != self.k or min(idx) < 0 or max(idx) >= self.n:
            raise IllegalPatternError(f"{tuple(indices)} is not a valid K-pattern")
        mask = np.zeros(self.n, dtype=bool)
        mask[idx] = True
        word = int(self.words_of_masks(mask))
        if word < 0:
            raise IllegalPatternError(
                f"pattern {tuple(sorted(indices))} has no label in {self.mode} mode"
            )
        return word


def pattern_encode(word, mode: str, n: int, k: int) -> tuple:
    """Active indices (1-based) for a ``p1``-bit word given as a bit sequence."""
    codec = IndexCodec(n, k, mode)
    word = np.asarray(word)
    if word.shape != (codec.p1,):
        raise InputSizeError(f"expected {codec.p1} index bits, got shape {word.shape}")
    return codec.encode(int(bits_to_int(word)) if codec.p1 else 0)


def pattern_decode(pattern, mode: str, n: int, k: int) -> np.ndarray:
    """Bit word for a 1-based active-index pattern."""
    codec = IndexCodec(n, k, mode)
    return int_to_bits(codec.decode(pattern), codec.p1)


class SubblockCodec:
    """Encoder/decoder for whole subblocks (pattern bits + symbol bits).

    The bit label of a subblock, read as a ``p``-bit integer, is also its
    position in :attr:`codebook`: ``word * M**K + symbol_word``.
    """

    def __init__(self, n: int, k: int, constellation: Constellation,
                 mode: str = "combinatorial"):
        self.index = IndexCodec(n, k, mode)
        self.constellation = constellation
        self.n, self.k, self.mode = n, k, mode
        self.bps = constellation.bits_per_symbol
        self.p1 = self.index.p1
        self.p2 = k * self.bps
        self.p = self.p1 + self.p2
        self.size = self.index.n_patterns * constellation.order ** k

    def encode(self, bits) -> np.ndarray:
        """Subblocks for bit groups on the last axis (length ``p``)."""
        bits = np.asarray(bits)
        if bits.shape[-1] != self.p:
            raise InputSizeError(f"expected {self.p} bits per subblock, got {bits.shape[-1]}")
        lead = bits.shape[:-1]
        words = bits_to_int(bits[..., : self.p1]) if self.p1 else np.zeros(lead, np.int64)
        sym_idx = bits_to_int(bits[..., self.p1:].reshape(lead + (self.k, self.bps)))
        return self.assemble(words, sym_idx)

    def assemble(self, words, sym_idx) -> np.ndarray:
        """Subblocks from pattern words and per-active-position symbol indices."""
        words = np.asarray(words)
        sym_idx = np.asarray(sym_idx)
        out = np.zeros(words.shape + (self.n,), dtype=np.complex128)
        pos = self.index.patterns[words]
        np.put_along_axis(out, pos, self.constellation.points[sym_idx], axis=-1)
        return out

    def labels(self, words, sym_idx) -> np.ndarray:
        """Bit labels (length ``p``) for pattern words and symbol indices."""
        words = np.asarray(words)
        word_bits = int_to_bits(words, self.p1)
        sym_bits = int_to_bits(np.asarray(sym_idx), self.bps)
        sym_bits = sym_bits.reshape(words.shape + (self.p2,))
        return np.concatenate([word_bits, sym_bits], axis=-1)

    def decode(self, subblocks) -> np.ndarray:
        """Bits for exact subblocks; raises on an unlabelled active pattern."""
        s = np.asarray(subblocks)
        if s.shape[-1] != self.n:
            raise InputSizeError(f"expected subblocks of length {self.n}")
        mask = s != 0
        if np.any(mask.sum(axis=-1) != self.k):
            raise IllegalPatternError("subblock does not have exactly K active entries")
        words = self.index.words_of_masks(mask)
        if np.any(words < 0):
            raise IllegalPatternError(f"active pattern has no label in {self.mode} mode")
        pos = self.index.patterns[words]
        active = np.take_along_axis(s, pos, axis=-1)
        return self.labels(words, self.constellation.nearest(active))

    @cached_property
    def codebook(self) -> np.ndarray:
        """All ``C * M**K`` legal subblocks, row ``c`` labelled by ``c`` in binary."""
        if self.size > CODEBOOK_CAP:
            raise CapacityError(
                f"subblock codebook of {self.size} entries exceeds cap {CODEBOOK_CAP}"
            )
        c = np.arange(self.size)
        words = c // self.constellation.order ** self.k
        rem = c % self.constellation.order ** self.k
        m = self.constellation.order
        sym_idx = (rem[:, None] // m ** np.arange(self.k - 1, -1, -1)) % m
        book = self.assemble(words, sym_idx)
        book.setflags(write=False)
        return book

    @cached_property
    def codebook_bits(self) -> np.ndarray:
        return int_to_bits(np.arange(self.size), self.p)

    @cached_property
    def value_index(self) -> np.ndarray:
        """``(size, N)`` table: 0 for an inactive slot, ``1 + m`` for point ``m``."""
        book = self.codebook
        idx = np.zeros(book.shape, dtype=np.int64)
        active = book != 0
        idx[active] = 1 + self.constellation.nearest(book[active])
        return idx


def subblock_encode(bits, c: Constellation, mode: str, n: int, k: int) -> np.ndarray:
    """Length-``N`` subblock carrying ``p1 + K log2 M`` bits."""
    return SubblockCodec(n, k, c, mode).encode(bits)


def subblock_decode(s, c: Constellation, mode: str, n: int, k: int) -> np.ndarray:
    """Inverse of :func:`subblock_encode`."""
    return SubblockCodec(n, k, c, mode).decode(s)
