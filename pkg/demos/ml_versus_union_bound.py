"""
Simulated ML error rate of a 2x2 BPSK system with N=4, K=2 against the
union bound on the average bit error probability.

The bound gets tight once the BER drops below about 1e-3. A short run takes
a minute or two; raise ``MIN_ERRORS`` for smoother numbers.

Run: python demos/ml_versus_union_bound.py
"""

from mimo_ofdm_im import SystemConfig
from mimo_ofdm_im.harness import StopRule, run_curve
from mimo_ofdm_im.theory import abep_ml_union, diversity_order_estimate

MIN_ERRORS = 100
GRID = [0, 4, 8, 12, 16]

cfg = SystemConfig(detector="ml", nfft=128, cp_len=9)
sim = run_curve(cfg, GRID, StopRule(MIN_ERRORS, 50_000), seed=1)
bound = abep_ml_union(cfg, GRID)

print(f"{'SNR dB':>7} {'sim BER':>10} {'bound':>10} {'errors':>7}")
for p, b in zip(sim, bound):
    print(f"{p.snr_db:7.1f} {p.ber:10.3e} {b:10.3e} {p.bit_errors:7d}")

slope = diversity_order_estimate(GRID, [p.ber for p in sim], [p.bit_errors for p in sim])
print(f"\nhigh-SNR slope {slope:.2f} (two receive antennas)")
