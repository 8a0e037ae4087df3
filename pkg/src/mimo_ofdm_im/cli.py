"""
Command-line front end.

Settings are resolved in increasing precedence: built-in defaults, a named
``--preset``, a ``key=value`` ``--config`` file, ``MIMO_OFDM_IM_<KEY>``
environment variables and finally explicit flags.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import CONFIG_KEYS, DETECTORS, SystemConfig, coerce_config_values, scheme_for_detector
from .exceptions import CapacityError, ConfigError, NotComputableError, NumericalError

ENV_PREFIX = "MIMO_OFDM_IM_"

RUN_KEYS = ("snr", "seed", "min_errors", "max_frames", "workers", "chunk_frames",
            "detectors", "theory", "samples", "out")
_RUN_TYPES = {"seed": int, "min_errors": int, "max_frames": int, "workers": int,
              "chunk_frames": int, "samples": int}
RUN_DEFAULTS = {"snr": "0:5:20", "seed": 0, "min_errors": 200, "max_frames": 100_000,
                "workers": 1, "chunk_frames": 32, "detectors": None, "theory": None,
                "samples": 100_000, "out": None}

# Desk-scaled figure setups: N_F = 128, C_p = 9 instead of 512 / 36. Per-subblock
# error rates do not depend on N_F under i.i.d. fading; spectral efficiency does
# and is reported by `info` for the resolved configuration.
DESK = {"nfft": 128, "cp_len": 9}
PRESETS = {
    "fig3a": dict(DESK, n_tx=2, n_rx=2, subblock_n=4, subblock_k=2, modulation="bpsk",
                  detectors="ml,near_ml,vblast_ml", theory="ml_union",
                  snr="0:4:24", max_frames=20_000),
    "fig4a": dict(DESK, n_tx=2, n_rx=2, subblock_n=4, subblock_k=3, modulation="qpsk",
                  detectors="mmse_simple,mmse_llr,mmse_llr_osic,vblast_mmse,vblast_mmse_osic",
                  theory="mmse_semianalytic", snr="0:5:30", max_frames=20_000),
    "fig5": dict(DESK, n_tx=4, n_rx=4, subblock_n=16, subblock_k=13, modulation="qam8",
                 index_mode="combinatorial", detectors="mmse_llr,vblast_mmse",
                 snr="0:5:30", max_frames=5_000),
    "fig6a": dict(DESK, n_tx=2, n_rx=4, subblock_n=4, subblock_k=3, modulation="qpsk",
                  channel="epa", taps=4,
                  detectors="mmse_llr,vblast_mmse,alamouti/modulation=qam16",
                  snr="0:5:25", max_frames=20_000),
}


def parse_snr(text: str) -> list[float]:
    """``start:step:stop`` (inclusive) or a comma-separated list of dB values."""
    text = str(text).strip()
    try:
        if ":" in text:
            start, step, stop = (float(v) for v in text.split(":"))
            if step <= 0:
                raise ConfigError("SNR step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            if n < 1:
                raise ConfigError(f"empty SNR range {text!r}")
            return [round(start + i * step, 10) for i in range(n)]
        vals = [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"cannot parse SNR grid {text!r}; use start:step:stop or a list") from None
    if not vals:
        raise ConfigError("SNR grid is empty")
    return vals


def read_config_file(path) -> dict:
    """``key=value`` lines; ``#`` starts a comment."""
    out = {}
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for num, line in enumerate(lines, 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{num}: expected key=value, got {line!r}")
        k, v = line.split("=", 1)
        out[k.strip().replace("-", "_")] = v.strip()
    return out


def env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out = {}
    for k, v in environ.items():
        if k.startswith(ENV_PREFIX):
            out[k[len(ENV_PREFIX):].lower()] = v
    return out


_FLAG_KEYS = {
    "scheme": "scheme", "detector": "detector", "t": "n_tx", "r": "n_rx", "n": "subblock_n",
    "k": "subblock_k", "mod": "modulation", "index_mode": "index_mode", "nfft": "nfft",
    "cp": "cp_len", "channel": "channel", "taps": "taps", "csi_q": "csi_q", "path": "path",
    "snr": "snr", "seed": "seed", "min_errors": "min_errors", "max_frames": "max_frames",
    "workers": "workers", "chunk_frames": "chunk_frames", "theory": "theory",
    "samples": "samples", "out": "out",
}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("system configuration")
    g.add_argument("--preset", choices=sorted(PRESETS),
                   help="figure setup at desk scale (N_F=128, C_p=9)")
    g.add_argument("--config", metavar="FILE", help="key=value configuration file")
    g.add_argument("--scheme", choices=("mimo-ofdm-im", "vblast", "alamouti"))
    g.add_argument("--detector", metavar="NAME[,NAME...]",
                   help=f"detector(s); one of {', '.join(DETECTORS)}. A curve may carry "
                        "overrides, e.g. alamouti/modulation=qam16")
    g.add_argument("--t", type=int, help="transmit antennas T")
    g.add_argument("--r", type=int, help="receive antennas R")
    g.add_argument("--n", type=int, help="subblock size N")
    g.add_argument("--k", type=int, help="active subcarriers per subblock K")
    g.add_argument("--mod", help="bpsk, qpsk, qam8, qam16 or qam64")
    g.add_argument("--index-mode", choices=("table", "combinatorial"))
    g.add_argument("--nfft", type=int, help="subcarriers N_F (default 512)")
    g.add_argument("--cp", type=int, help="cyclic prefix length C_p (default 36)")
    g.add_argument("--channel", choices=("uniform", "epa"))
    g.add_argument("--taps", type=int, help="channel taps L (default 10)")
    g.add_argument("--csi-q", type=float, help="CSI quality Q (inf = perfect)")
    g.add_argument("--path", choices=("frequency", "time"))


def _add_run_flags(p, snr=True, stop=True):
    if snr:
        p.add_argument("--snr", help="SNR grid in dB, start:step:stop or a,b,c")
    p.add_argument("--seed", type=int)
    if stop:
        p.add_argument("--min-errors", type=int, help="bit errors per point before stopping")
        p.add_argument("--max-frames", type=int, help="frame cap per point")
        p.add_argument("--workers", type=int, help="worker processes (results do not change)")
        p.add_argument("--chunk-frames", type=int, help="frames per work unit")
    p.add_argument("--out", help="output directory (simulate) or CSV file (bound)")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="mimo-ofdm-im",
        description="MIMO-OFDM with index modulation: link simulation and error-rate bounds.",
        epilog="Environment variables MIMO_OFDM_IM_<KEY> (e.g. MIMO_OFDM_IM_NFFT=128) "
               "override presets and config files; flags override everything.",
    )
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo BER campaign; writes CSV per curve")
    _add_config_flags(p)
    _add_run_flags(p)
    p.add_argument("--theory", choices=("ml_union", "mmse_bound", "mmse_semianalytic"),
                   help="attach an analytical curve for the base configuration")
    p.add_argument("--samples", type=int, help="channel samples for the semi-analytical curve")

    p = sub.add_parser("bound", help="analytical ABEP curve as CSV (snr_db,abep)")
    _add_config_flags(p)
    _add_run_flags(p, stop=False)
    p.add_argument("--theory", choices=("ml_union", "mmse_bound", "mmse_semianalytic"),
                   help="default: ml_union for ML detectors, mmse_bound otherwise")
    p.add_argument("--samples", type=int)

    p = sub.add_parser("info", help="spectral efficiency and complexity figures")
    _add_config_flags(p)

    p = sub.add_parser("codec-test", help="exhaustive encoder/decoder round trips")
    p.add_argument("--samples", type=int, default=10_000,
                   help="random words for codecs with more than 2^16 labels")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("selftest", help="oracle-equivalence checks")
    p.add_argument("--seed", type=int, default=0)
    return ap


def resolve(args: argparse.Namespace, environ=None) -> tuple[SystemConfig, dict]:
    """Merge defaults, preset, file, environment and flags."""
    merged: dict = {}
    if getattr(args, "preset", None):
        merged.update(PRESETS[args.preset])
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    merged.update(env_overrides(environ))
    for flag, key in _FLAG_KEYS.items():
        val = getattr(args, flag, None)
        if val is not None:
            merged[key] = val
    det = getattr(args, "detector", None)
    if det is not None:
        merged["detectors"] = det
    elif "detector" in merged and "detectors" not in merged:
        merged["detectors"] = merged["detector"]

    unknown = set(merged) - set(CONFIG_KEYS) - set(RUN_KEYS)
    if unknown:
        raise ConfigError(f"unknown setting(s): {', '.join(sorted(unknown))}")
    run = dict(RUN_DEFAULTS)
    for k in RUN_KEYS:
        if k in merged:
            v = merged[k]
            kind = _RUN_TYPES.get(k)
            if kind is not None:
                try:
                    v = kind(v)
                except (TypeError, ValueError):
                    raise ConfigError(f"bad value {v!r} for {k}") from None
            run[k] = v

    cfg_vals = coerce_config_values({k: merged[k] for k in CONFIG_KEYS if k in merged})
    detectors = [d.strip() for d in str(run["detectors"]).split(",")] if run["detectors"] else []
    first = detectors[0].split("/")[0] if detectors else cfg_vals.get("detector", "ml")
    cfg_vals["detector"] = first
    if "scheme" not in cfg_vals:
        cfg_vals["scheme"] = scheme_for_detector(first)
    cfg = SystemConfig(**cfg_vals)
    run["detectors"] = detectors or [cfg.detector]
    run["snr"] = parse_snr(run["snr"])
    return cfg, run


# sub-commands ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    from .harness import StopRule, run_campaign, write_campaign
    cfg, run = resolve(args)
    if run["out"] is None:
        raise ConfigError("simulate needs --out DIR")
    result = run_campaign(cfg, run["snr"], run["detectors"],
                          StopRule(run["min_errors"], run["max_frames"]),
                          seed=run["seed"], workers=run["workers"],
                          chunk_frames=run["chunk_frames"], theory=run["theory"],
                          theory_samples=run["samples"])
    paths = write_campaign(result, run["out"])
    for label, points in result.curves.items():
        for p in points:
            print(f"{label:>24s}  {p.snr_db:6.2f} dB  BER={p.ber:.3e}  "
                  f"errors={p.bit_errors}  frames={p.frames}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def cmd_bound(args) -> int:
    from .harness import atomic_write, config_header
    from .theory import theory_curve
    cfg, run = resolve(args)
    kind = run["theory"]
    if kind is None:
        kind = "ml_union" if cfg.detector in ("ml", "near_ml") else "mmse_bound"
    if cfg.scheme != "mimo-ofdm-im":
        raise ConfigError("analytical curves are available for MIMO-OFDM-IM only")
    curve = theory_curve(cfg, run["snr"], kind, seed=run["seed"], samples=run["samples"])
    text = (config_header(cfg, {"theory": kind, "seed": run["seed"]}) + "snr_db,abep\n"
            + "".join(f"{s!r},{v!r}\n" for s, v in curve))
    if run["out"]:
        atomic_write(run["out"], text)
        print(f"wrote {run['out']}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_info(args) -> int:
    from .theory import complexity_count, printed_table_spectral_efficiency, spectral_efficiency
    cfg, _ = resolve(args)
    print(f"scheme            {cfg.scheme}")
    print(f"T x R             {cfg.n_tx} x {cfg.n_rx}")
    print(f"modulation        {cfg.modulation} (M={cfg.constellation.order})")
    print(f"N_F, C_p          {cfg.nfft}, {cfg.cp_len}")
    if cfg.scheme == "mimo-ofdm-im":
        c = cfg.codec
        print(f"N, K, mode        {cfg.subblock_n}, {cfg.subblock_k}, {cfg.index_mode}")
        print(f"p1, p2, p         {c.p1}, {c.p2}, {c.p}")
        print(f"G, m              {cfg.n_groups}, {cfg.bits_per_antenna}")
    print(f"sigma_x^2         {cfg.sigma_x2:g}")
    print(f"E_b               {cfg.energy_per_bit:.6g}")
    print(f"spectral eff.     {spectral_efficiency(cfg):.2f} bits/s/Hz")
    if cfg.scheme == "mimo-ofdm-im":
        print(f"  table-row form  {printed_table_spectral_efficiency(cfg):.4f} bits/s/Hz "
              "(N T p / (K (N_F + C_p)), printed for comparison)")
    print("complex multiplications per subcarrier:")
    if cfg.scheme == "mimo-ofdm-im":
        names = ("ml", "near_ml", "mmse_simple", "mmse_llr", "mmse_llr_osic")
    elif cfg.scheme == "vblast":
        names = ("vblast_ml", "vblast_mmse", "vblast_mmse_osic")
    else:
        names = ("alamouti",)
    for d in names:
        v = complexity_count(cfg, d)
        bound = "< " if d.endswith("osic") else ""
        print(f"  {d:<18s}{'n/a' if v is None else bound + str(v)}")
    return 0


CODEC_TEST_CASES = [
    (4, 2, "bpsk", "table"), (4, 3, "qpsk", "table"),
    (4, 2, "bpsk", "combinatorial"), (4, 3, "qpsk", "combinatorial"),
    (8, 2, "bpsk", "combinatorial"), (8, 4, "qpsk", "combinatorial"),
    (16, 13, "qam8", "combinatorial"),
]


def codec_round_trip(n, k, mod, mode, samples=10_000, seed=0) -> tuple[int, int]:
    """``(words_checked, failures)`` for one codec."""
    from .constellation import int_to_bits, make_constellation
    from .index_codec import SubblockCodec
    codec = SubblockCodec(n, k, make_constellation(mod), mode)
    if codec.p <= 16:
        bits = int_to_bits(np.arange(1 << codec.p), codec.p)
    else:
        bits = np.random.default_rng(seed).integers(0, 2, (samples, codec.p), dtype=np.int8)
    s = codec.encode(bits)
    ok_k = np.count_nonzero(s, axis=-1) == k
    back = codec.decode(s)
    fails = int(np.count_nonzero(~(np.all(back == bits, axis=-1) & ok_k)))
    return len(bits), fails


def cmd_codec_test(args) -> int:
    bad = 0
    for n, k, mod, mode in CODEC_TEST_CASES:
        words, fails = codec_round_trip(n, k, mod, mode, args.samples, args.seed)
        status = "PASS" if fails == 0 else "FAIL"
        print(f"{status}  N={n:<2d} K={k:<2d} {mod:<5s} {mode:<13s} {words} words, {fails} failures")
        bad += fails
    return 0 if bad == 0 else 1


def cmd_selftest(args) -> int:
    from .selftest import run_selftest
    results = run_selftest(seed=args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


COMMANDS = {"simulate": cmd_simulate, "bound": cmd_bound, "info": cmd_info,
            "codec-test": cmd_codec_test, "selftest": cmd_selftest}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, CapacityError, NotComputableError, NumericalError) as exc:
        print(f"mimo-ofdm-im {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"mimo-ofdm-im {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"mimo-ofdm-im {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
