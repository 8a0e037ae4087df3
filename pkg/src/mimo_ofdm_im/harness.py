"""
Monte Carlo BER engine.

Every frame draws from its own generator seeded by ``(seed, frame_index)``,
so results do not depend on how frames are split across workers. The same
frame index reuses the same bits, channel, CSI error and unit-variance noise
at every SNR and for every detector (common random numbers), which makes
curve comparisons less noisy.

Frames are processed in chunks of ``chunk_frames``; the stopping rule is
checked after each chunk in chunk order, whatever the worker count.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import corrupt_csi, crandn, draw_channel, propagate_time_domain, snr_to_noise
from .config import SystemConfig, coerce_config_values, scheme_for_detector
from .constellation import bits_to_int
from .detect import (
    SubblockObservation,
    alamouti_detect,
    alamouti_encode,
    detect_subblocks,
    vblast_detect,
)
from .exceptions import ConfigError
from .frame import deinterleave, interleave, ofdm_demodulate, ofdm_modulate, ofdm_scale

CSV_COLUMNS = ("snr_db", "frames", "bits", "bit_errors", "index_bit_errors",
               "symbol_bit_errors", "ber")


@dataclass(frozen=True)
class StopRule:
    """Stop a point once ``min_errors`` bit errors or ``max_frames`` frames are reached."""

    min_errors: int = 200
    max_frames: int = 100_000

    def __post_init__(self):
        if self.min_errors < 1 or self.max_frames < 1:
            raise ConfigError("stop rule needs min_errors >= 1 and max_frames >= 1")


@dataclass
class BerPoint:
    snr_db: float
    frames: int = 0
    bits: int = 0
    bit_errors: int = 0
    index_bit_errors: int = 0
    symbol_bit_errors: int = 0
    illegal_events: int = 0
    elapsed_s: float = 0.0

    @property
    def ber(self) -> float:
        return self.bit_errors / self.bits if self.bits else math.nan

    def add(self, counts) -> None:
        frames, bits, idx_err, sym_err, illegal = counts
        self.frames += frames
        self.bits += bits
        self.index_bit_errors += idx_err
        self.symbol_bit_errors += sym_err
        self.bit_errors += idx_err + sym_err
        self.illegal_events += illegal

    def std_error(self) -> float:
        """Binomial standard error of the BER estimate."""
        if not self.bits:
            return math.nan
        p = self.ber
        return math.sqrt(max(p * (1 - p), 0.0) / self.bits)

    def csv_row(self) -> str:
        return (f"{self.snr_db!r},{self.frames},{self.bits},{self.bit_errors},"
                f"{self.index_bit_errors},{self.symbol_bit_errors},{self.ber!r}")


@dataclass
class CampaignResult:
    config: SystemConfig
    seed: int
    stop: StopRule
    curves: dict = field(default_factory=dict)    # label -> list[BerPoint]
    configs: dict = field(default_factory=dict)   # label -> SystemConfig
    theory: dict = field(default_factory=dict)    # label -> list[(snr_db, abep)]


# frame generation ---------------------------------------------------------

def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, frame_index]))


def _draw_common(cfg: SystemConfig, rng, n_bits_shape, n_symbols: int):
    bits = rng.integers(0, 2, size=n_bits_shape, dtype=np.int8)
    ch = draw_channel(cfg.n_tx, cfg.n_rx, cfg.taps, cfg.channel, cfg.nfft, rng)
    # drawn even for perfect CSI so later streams line up across Q values
    csi_err = crandn(rng, (cfg.nfft, cfg.n_rx, cfg.n_tx))
    noise = crandn(rng, (n_symbols, cfg.n_rx, cfg.nfft))
    cp_noise = crandn(rng, (n_symbols, cfg.n_rx, cfg.cp_len))
    return bits, ch, csi_err, noise, cp_noise


def _receive(cfg: SystemConfig, x_phys, ch, noise, cp_noise, n0t, n0f, sigma_x2):
    """Received ``(R, N_F)`` block for transmitted ``(T, N_F)`` physical-order block."""
    if cfg.path == "frequency":
        y = np.einsum("rtk,tk->rk", ch.freq, x_phys)
        return y + math.sqrt(n0f) * noise
    q = ofdm_modulate(x_phys, cfg.cp_len, sigma_x2)
    r = propagate_time_domain(q, ch.taps)
    body = ofdm_scale(cfg.nfft, sigma_x2) * math.sqrt(n0f) * np.fft.ifft(noise, axis=-1)
    r = r + np.concatenate([math.sqrt(n0t) * cp_noise, body], axis=-1)
    return ofdm_demodulate(r, cfg.cp_len, sigma_x2)


def _estimate(cfg, h, csi_err, n0f):
    return corrupt_csi(h, cfg.csi_q, n0f, unit_error=csi_err)


def _im_chunk(cfg: SystemConfig, snr_db, seed, frames):
    codec = cfg.codec
    n, t = cfg.subblock_n, cfg.n_tx
    n0t, n0f = snr_to_noise(snr_db, cfg)
    ys, hs, sent = [], [], []
    for f in frames:
        rng = frame_rng(seed, f)
        bits, ch, csi_err, noise, cp_noise = _draw_common(
            cfg, rng, (t, cfg.n_groups, codec.p), 1)
        x = codec.encode(bits)                                  # (T, G, N)
        x_phys = interleave(x.reshape(t, -1), n)
        y = _receive(cfg, x_phys, ch, noise[0], cp_noise[0], n0t, n0f, cfg.sigma_x2)
        h_phys = np.moveaxis(ch.freq, -1, 0)                    # (N_F, R, T)
        h_phys = _estimate(cfg, h_phys, csi_err, n0f)
        h_sub = deinterleave(np.moveaxis(h_phys, 0, -1), n)     # (R, T, N_F)
        ys.append(deinterleave(y, n).T.reshape(cfg.n_groups, n, cfg.n_rx))
        hs.append(np.moveaxis(h_sub, -1, 0).reshape(cfg.n_groups, n, cfg.n_rx, t))
        sent.append(np.swapaxes(bits, 0, 1))                    # (G, T, p)
    obs = SubblockObservation(np.concatenate(ys), np.concatenate(hs), n0f)
    res = detect_subblocks(obs, codec, cfg.detector, cfg.sigma_x2)
    err = res.bits != np.concatenate(sent)
    p1 = codec.p1
    return (len(frames), err.size, int(err[..., :p1].sum()), int(err[..., p1:].sum()),
            res.illegal_count)


def _symbols(bits, c):
    return bits_to_int(bits), c.points[bits_to_int(bits)]


def _vblast_chunk(cfg: SystemConfig, snr_db, seed, frames):
    c = cfg.constellation
    bps = c.bits_per_symbol
    n0t, n0f = snr_to_noise(snr_db, cfg)
    ys, hs, sent = [], [], []
    for f in frames:
        rng = frame_rng(seed, f)
        bits, ch, csi_err, noise, cp_noise = _draw_common(
            cfg, rng, (cfg.n_tx, cfg.nfft, bps), 1)
        idx, x = _symbols(bits, c)                               # (T, N_F)
        y = _receive(cfg, x, ch, noise[0], cp_noise[0], n0t, n0f, 1.0)
        ys.append(y.T)
        hs.append(_estimate(cfg, np.moveaxis(ch.freq, -1, 0), csi_err, n0f))
        sent.append(idx.T)
    variant = cfg.detector.removeprefix("vblast_")
    dec = vblast_detect(np.concatenate(ys), np.concatenate(hs), n0f, c, variant)
    tx = np.concatenate(sent)
    err = _bit_errors(dec, tx, bps)
    return len(frames), tx.size * bps, 0, err, 0


def _alamouti_chunk(cfg: SystemConfig, snr_db, seed, frames):
    c = cfg.constellation
    bps = c.bits_per_symbol
    n0t, n0f = snr_to_noise(snr_db, cfg)
    y1s, y2s, hs, sent = [], [], [], []
    for f in frames:
        rng = frame_rng(seed, f)
        bits, ch, csi_err, noise, cp_noise = _draw_common(
            cfg, rng, (cfg.nfft, 2, bps), 2)
        idx, s = _symbols(bits, c)                               # (N_F, 2)
        slot1, slot2 = alamouti_encode(s[:, 0], s[:, 1])        # (N_F, 2) each
        h = np.moveaxis(ch.freq, -1, 0)                         # (N_F, R, T)
        y1 = np.einsum("krt,kt->kr", h, slot1) + math.sqrt(n0f) * noise[0].T
        y2 = np.einsum("krt,kt->kr", h, slot2) + math.sqrt(n0f) * noise[1].T
        y1s.append(y1)
        y2s.append(y2)
        hs.append(_estimate(cfg, h, csi_err, n0f))
        sent.append(idx)
    dec = alamouti_detect(np.concatenate(y1s), np.concatenate(y2s), np.concatenate(hs), c)
    tx = np.concatenate(sent)
    err = _bit_errors(dec, tx, bps)
    return len(frames), tx.size * bps, 0, err, 0


def _bit_errors(dec, tx, bps):
    diff = np.bitwise_xor(dec.astype(np.int64), tx.astype(np.int64))
    return int(sum(((diff >> b) & 1).sum() for b in range(bps)))


def simulate_frames(cfg: SystemConfig, snr_db: float, seed: int, frames) -> tuple:
    """Run the given frame indices and return
    ``(frames, bits, index_bit_errors, symbol_bit_errors, illegal_events)``."""
    frames = list(frames)
    if not frames:
        return 0, 0, 0, 0, 0
    if cfg.scheme == "mimo-ofdm-im":
        return _im_chunk(cfg, snr_db, seed, frames)
    if cfg.scheme == "vblast":
        return _vblast_chunk(cfg, snr_db, seed, frames)
    return _alamouti_chunk(cfg, snr_db, seed, frames)


def _chunk_task(args):
    cfg, snr_db, seed, start, count = args
    return simulate_frames(cfg, snr_db, seed, range(start, start + count))


def run_point(cfg: SystemConfig, snr_db: float, stop: StopRule | None = None,
              seed: int = 0, workers: int = 1, chunk_frames: int = 32,
              executor: ProcessPoolExecutor | None = None) -> BerPoint:
    """Simulate one SNR point until the stop rule fires.

    Parameters
    ----------
    cfg : SystemConfig
    snr_db : float
        ``E_b / N0_T`` in dB.
    stop : StopRule, optional
    seed : int
    workers : int
        Process count; ``1`` runs inline. Results are identical for any value.
    chunk_frames : int
        Frames per work unit and stopping-rule granularity.
    """
    stop = stop or StopRule()
    if chunk_frames < 1:
        raise ConfigError("chunk_frames must be positive")
    point = BerPoint(float(snr_db))
    t0 = time.perf_counter()
    starts = list(range(0, stop.max_frames, chunk_frames))
    tasks = [(cfg, snr_db, seed, s, min(chunk_frames, stop.max_frames - s)) for s in starts]

    own = None
    if workers > 1 and executor is None:
        executor = own = ProcessPoolExecutor(max_workers=workers)
    try:
        pos = 0
        while pos < len(tasks) and point.bit_errors < stop.min_errors:
            if executor is None:
                results = [_chunk_task(tasks[pos])]
            else:
                results = list(executor.map(_chunk_task, tasks[pos:pos + workers]))
            for counts in results:
                point.add(counts)
                pos += 1
                if point.bit_errors >= stop.min_errors:
                    break
    finally:
        if own is not None:
            own.shutdown()
    point.elapsed_s = time.perf_counter() - t0
    return point


def run_curve(cfg: SystemConfig, snr_grid, stop: StopRule | None = None, seed: int = 0,
              workers: int = 1, chunk_frames: int = 32, stop_below: float | None = None):
    """BER points for an ascending SNR grid.

    ``stop_below`` ends the sweep early once a point's BER falls below it
    (points already simulated are kept).
    """
    grid = sorted(float(s) for s in snr_grid)
    if not grid:
        raise ConfigError("SNR grid is empty")
    points = []
    executor = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for s in grid:
            p = run_point(cfg, s, stop, seed, workers, chunk_frames, executor)
            points.append(p)
            if stop_below is not None and p.ber < stop_below:
                break
    finally:
        if executor is not None:
            executor.shutdown()
    return points


def parse_curve_spec(spec) -> tuple[str, str, dict]:
    """``"detector"`` or ``"detector/key=value/..."`` -> ``(label, detector, overrides)``.

    Tuples ``(label, detector, overrides)`` pass through unchanged.
    """
    if not isinstance(spec, str):
        label, det, over = spec
        return label, det, dict(over)
    parts = spec.split("/")
    det, over = parts[0], {}
    for item in parts[1:]:
        if "=" not in item:
            raise ConfigError(f"bad curve override {item!r} in {spec!r}; expected key=value")
        k, v = item.split("=", 1)
        over[k.strip()] = v.strip()
    label = "_".join([det] + [f"{k}-{v}" for k, v in over.items()])
    return label, det, over


def curve_config(cfg: SystemConfig, detector: str, overrides: dict | None = None) -> SystemConfig:
    changes = coerce_config_values(overrides or {})
    return cfg.replace(scheme=scheme_for_detector(detector), detector=detector, **changes)


def run_campaign(cfg: SystemConfig, snr_grid, detectors=None, stop: StopRule | None = None,
                 seed: int = 0, workers: int = 1, chunk_frames: int = 32,
                 theory: str | None = None, out_dir=None,
                 theory_samples: int = 10**5) -> CampaignResult:
    """One BER curve per detector, optionally with an analytical curve.

    ``detectors`` defaults to ``[cfg.detector]``. Entries are detector names,
    optionally with per-curve overrides (``"alamouti/modulation=qam16"``);
    the scheme of each curve follows from its detector name. ``theory`` is
    one of ``"ml_union"``, ``"mmse_bound"`` or ``"mmse_semianalytic"`` and
    is evaluated for the base configuration.
    """
    if detectors is None:
        detectors = [cfg.detector]
    specs = [parse_curve_spec(d) for d in detectors]
    if not specs:
        raise ConfigError("campaign needs at least one detector")
    grid = sorted(float(s) for s in snr_grid)
    if not grid:
        raise ConfigError("SNR grid is empty")
    stop = stop or StopRule()
    result = CampaignResult(cfg, seed, stop)
    # validate every curve before simulating any of them
    for label, det, over in specs:
        result.configs[label] = curve_config(cfg, det, over)
    for label, c in result.configs.items():
        result.curves[label] = run_curve(c, grid, stop, seed, workers, chunk_frames)
    if theory is not None:
        from . import theory as th
        result.theory[theory] = th.theory_curve(cfg, grid, theory, seed=seed,
                                                samples=theory_samples)
    if out_dir is not None:
        write_campaign(result, out_dir)
    return result


# persistence ---------------------------------------------------------------

def config_header(cfg: SystemConfig, extra: dict | None = None) -> str:
    items = dict(cfg.as_dict())
    items.update(extra or {})
    return "".join(f"# {k}={v}\n" for k, v in items.items())


def curve_csv(cfg: SystemConfig, points, extra: dict | None = None) -> str:
    body = "\n".join(p.csv_row() for p in points)
    return config_header(cfg, extra) + ",".join(CSV_COLUMNS) + "\n" + body + ("\n" if body else "")


def atomic_write(path, text: str) -> None:
    """Write ``text`` to ``path`` through a temporary file and a rename."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _run_header(result: CampaignResult) -> dict:
    return {"seed": result.seed, "min_errors": result.stop.min_errors,
            "max_frames": result.stop.max_frames}


def write_campaign(result: CampaignResult, out_dir) -> list[Path]:
    """CSV per curve plus ``campaign.json``; returns the paths written."""
    out_dir = Path(out_dir)
    texts = {}
    for label, points in result.curves.items():
        cfg = result.configs.get(label) or curve_config(result.config, label)
        texts[out_dir / f"{label}.csv"] = curve_csv(cfg, points, _run_header(result))
    for label, curve in result.theory.items():
        rows = "".join(f"{s!r},{v!r}\n" for s, v in curve)
        texts[out_dir / f"theory_{label}.csv"] = (
            config_header(result.config, {"theory": label}) + "snr_db,abep\n" + rows)
    summary = {
        "config": {k: (str(v) if isinstance(v, float) and math.isinf(v) else v)
                   for k, v in result.config.as_dict().items()},
        **_run_header(result),
        "curves": {label: [dict(dataclasses.asdict(p), ber=p.ber) for p in pts]
                   for label, pts in result.curves.items()},
        "theory": {label: [list(row) for row in curve] for label, curve in result.theory.items()},
    }
    texts[out_dir / "campaign.json"] = json.dumps(summary, indent=2) + "\n"
    for path, text in texts.items():
        atomic_write(path, text)
    return list(texts)
