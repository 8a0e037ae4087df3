"""
Effect of channel estimation errors on a 2x4 link over the EPA profile.

The receiver uses H + E with error variance N0_F / Q and keeps its
detection rules unchanged. All curves share random streams, so the only
difference between the two runs of a scheme is the estimation error.

Run: python demos/imperfect_csi.py
"""

import math

from mimo_ofdm_im import SystemConfig
from mimo_ofdm_im.harness import StopRule, run_curve

base = SystemConfig(n_tx=2, n_rx=4, subblock_k=3, modulation="qpsk",
                    channel="epa", taps=4, nfft=128, cp_len=9)
links = {
    "IM, MMSE-LLR": base.replace(detector="mmse_llr"),
    "V-BLAST, MMSE": base.replace(scheme="vblast", detector="vblast_mmse"),
    "Alamouti, 16-QAM": base.replace(scheme="alamouti", detector="alamouti", modulation="qam16"),
}
grid = [0, 4, 8, 12]
stop = StopRule(100, 5_000)

for name, cfg in links.items():
    print(name)
    for q in (math.inf, 1.0):
        pts = run_curve(cfg.replace(csi_q=q), grid, stop, seed=3)
        print(f"  Q={q:<4g} " + "  ".join(f"{p.ber:.2e}" for p in pts))
