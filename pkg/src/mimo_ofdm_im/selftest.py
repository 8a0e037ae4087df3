"""Quick oracle-equivalence checks behind ``mimo-ofdm-im selftest``."""

from __future__ import annotations

import numpy as np

from .channel import crandn
from .config import SystemConfig
from .constellation import make_constellation
from .detect import SubblockObservation, ml_detect, near_ml_detect, near_ml_posteriors
from .harness import simulate_frames
from .index_codec import SubblockCodec, pattern_encode
from .theory import upep_from_deltas


def _random_obs(codec, t, r, b, n0, rng):
    bits = rng.integers(0, 2, (b, t, codec.p), dtype=np.int8)
    x = codec.encode(bits)
    h = crandn(rng, (b, codec.n, r, t))
    y = np.einsum("bnrt,btn->bnr", h, x) + np.sqrt(n0) * crandn(rng, (b, codec.n, r))
    return SubblockObservation(y, h, n0), bits


def run_selftest(seed: int = 0) -> list[tuple[str, bool, str]]:
    rng = np.random.default_rng(seed)
    out = []
    codec = SubblockCodec(4, 2, make_constellation("bpsk"), "table")

    rows = [pattern_encode(w, "table", 4, 2) for w in ([0, 0], [0, 1], [1, 0], [1, 1])]
    rows += [pattern_encode(w, "table", 4, 3) for w in ([0, 0], [0, 1], [1, 0], [1, 1])]
    expect = [(1, 3), (2, 4), (1, 4), (2, 3), (1, 2, 3), (1, 2, 4), (1, 3, 4), (2, 3, 4)]
    out.append(("look-up tables", rows == expect, f"{sum(a == b for a, b in zip(rows, expect))}/8 rows"))

    obs, _ = _random_obs(codec, 2, 2, 300, 0.3, rng)
    dec = [ml_detect(obs, codec, f).bits for f in ("factored", "per_antenna", "stacked")]
    agree = all(np.array_equal(dec[0], d) for d in dec[1:])
    out.append(("ML forms agree", agree, "factored, per-antenna and stacked on 300 subblocks"))

    obs, _ = _random_obs(codec, 2, 2, 300, 1e-4, rng)
    same = np.mean(np.all(near_ml_detect(obs, codec).bits == ml_detect(obs, codec).bits, axis=-1))
    out.append(("near-ML matches ML at low noise", same >= 0.99, f"{same:.3f} of antenna subblocks"))

    tot = np.exp(near_ml_posteriors(obs, codec)).sum(axis=-1)
    dev = float(np.abs(tot - 1).max())
    out.append(("posterior normalization", dev < 1e-9, f"max |sum - 1| = {dev:.1e}"))

    g = np.array([1e-2, 0.3, 5.0, 300.0])
    num = upep_from_deltas(np.c_[4 * g, np.zeros((4, 3))], 1.0, 1)
    ref = 0.5 * (1 - np.sqrt(g / (1 + g)))
    rel = float(np.max(np.abs(num / ref - 1)))
    out.append(("UPEP quadrature vs closed form", rel < 1e-8, f"max rel. error {rel:.1e}"))

    cfg = SystemConfig(nfft=64, cp_len=9, detector="mmse_llr", subblock_k=3, modulation="qpsk")
    a = simulate_frames(cfg, 6.0, seed, range(20))
    b = simulate_frames(cfg.replace(path="time"), 6.0, seed, range(20))
    out.append(("time/frequency paths", a == b, f"errors {a[2] + a[3]} vs {b[2] + b[3]}"))
    return out
