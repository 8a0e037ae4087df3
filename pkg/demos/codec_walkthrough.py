"""
Walk through one transmitter chain: bits -> subblocks -> interleaved OFDM
block -> time samples, and back again over a noiseless channel.

Run: python demos/codec_walkthrough.py
"""

import numpy as np

from mimo_ofdm_im import SystemConfig
from mimo_ofdm_im.frame import (
    assemble_block,
    deinterleave,
    interleave,
    ofdm_demodulate,
    ofdm_modulate,
)

cfg = SystemConfig(nfft=16, cp_len=4, taps=1, subblock_k=2, modulation="bpsk")
codec = cfg.codec
print(f"N={codec.n} K={codec.k}: p1={codec.p1} index bits, p2={codec.p2} symbol bits per subblock")

# The look-up table: two index bits pick one of four active-subcarrier pairs.
for word in range(codec.index.n_patterns):
    print(f"  word {word:02b} -> active subcarriers {codec.index.encode(word)}")

rng = np.random.default_rng(7)
bits = rng.integers(0, 2, (cfg.n_groups, codec.p))
sub = codec.encode(bits)
print("\nsubblocks (rows) before interleaving:")
print(np.real(sub).astype(int))

# Subcarriers of one subblock end up G positions apart.
x = interleave(assemble_block(sub), codec.n)
print("\ninterleaved block:", np.real(x).astype(int))

# OFDM with the energy normalization that keeps time samples at unit power.
q = ofdm_modulate(x, cfg.cp_len, cfg.sigma_x2)
print(f"time-domain energy per sample: {np.mean(np.abs(q[cfg.cp_len:]) ** 2):.3f}")

y = ofdm_demodulate(q, cfg.cp_len, cfg.sigma_x2)
back = codec.decode(deinterleave(y, codec.n).reshape(cfg.n_groups, codec.n).round(12))
print("bits recovered exactly:", np.array_equal(back, bits))
