"""
Analytical error-probability calculators.

All pairwise error probabilities reduce to

    P = (1/pi) * int_0^{pi/2} prod_n (sin^2 t / (sin^2 t + Delta_n / (4 N0)))^R dt

which is evaluated by adaptive vector quadrature. Union bounds bucket the
pairwise events by their per-subcarrier distance profile: under i.i.d.
Rayleigh fading the UPEP depends only on the multiset ``{Delta_n}``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad_vec
from scipy.special import comb, ndtr

from .channel import crandn, snr_to_noise
from .config import SystemConfig
from .detect import mmse_filter
from .exceptions import CapacityError, ConfigError, NotComputableError

PROFILE_CAP = 1 << 20
PEP_EPSABS = 1e-13
DELTA_DECIMALS = 9


def _pep_integral(coef: np.ndarray, exponent: float, chunk: int = 4096) -> np.ndarray:
    """Quadrature for rows of ``coef = Delta_n / (4 N0)``; returns one value per row."""
    coef = np.atleast_2d(np.asarray(coef, dtype=float))
    out = np.empty(coef.shape[0])
    for a in range(0, coef.shape[0], chunk):
        c = coef[a:a + chunk]

        def f(theta, c=c):
            s2 = math.sin(theta) ** 2
            with np.errstate(divide="ignore"):
                return np.exp(exponent * np.log(s2 / (s2 + c)).sum(axis=-1))

        val, _ = quad_vec(f, 0.0, math.pi / 2, epsabs=PEP_EPSABS, epsrel=1e-12, norm="max")
        out[a:a + chunk] = val / math.pi
    return np.clip(out, 0.0, 0.5)


def upep_from_deltas(deltas, n0: float, n_rx: int = 1) -> np.ndarray:
    """UPEP for rows of per-subcarrier squared distances ``(..., N)``."""
    deltas = np.asarray(deltas, dtype=float)
    if n0 <= 0:
        return np.where(np.any(deltas > 0, axis=-1), 0.0, 0.5)
    lead = deltas.shape[:-1]
    flat = deltas.reshape(-1, deltas.shape[-1])
    return _pep_integral(flat / (4.0 * n0), n_rx).reshape(lead)


def pair_deltas(x, e) -> np.ndarray:
    """``Delta_n = sum_t |x_t(n) - e_t(n)|^2`` for ``(T, N)`` (or ``(N,)``) tuples."""
    d = np.abs(np.asarray(x) - np.asarray(e)) ** 2
    return d if d.ndim == 1 else d.sum(axis=0)


def upep_ml(x, e, n0: float, n_rx: int) -> float:
    """Unconditional PEP of the brute-force ML detector for ``x -> e``."""
    return float(upep_from_deltas(pair_deltas(x, e), n0, n_rx))


def upep_mmse_bound(delta, n0: float, n_tx: int | None = None, n_rx: int | None = None) -> float:
    """Upper bound on the simple-MMSE UPEP with exponentially distributed ``Z_n``.

    Only valid for ``T = R``; a warning is issued otherwise.
    """
    if n_tx is not None and n_rx is not None and n_tx != n_rx:
        warnings.warn("MMSE UPEP bound assumes T = R", RuntimeWarning, stacklevel=2)
    return float(upep_from_deltas(np.asarray(delta, dtype=float), n0, 1))


# semi-analytical MMSE -------------------------------------------------------

def draw_channel_matrices(n_tx: int, n_rx: int, samples: int, rng) -> np.ndarray:
    """``(samples, R, T)`` i.i.d. unit-variance Rayleigh matrices."""
    return crandn(rng, (samples, n_rx, n_tx))


def v_samples(h: np.ndarray, n0: float, sigma_x2: float) -> np.ndarray:
    """``V = Q^2 / (2 C)`` for antenna 0 of every channel matrix in ``h``."""
    st = mmse_filter(h, n0, sigma_x2, check=False)
    return st.gain[..., 0] ** 2 / (2.0 * st.var[..., 0])


def _q_func(x):
    return ndtr(-x)


def _semianalytic_from_v(deltas: np.ndarray, v: np.ndarray, chunk: int = 1 << 22) -> np.ndarray:
    # deltas (P, N), v (N, S): mean over s of Q(sqrt(sum_n V_n(s) Delta_n))
    p = deltas.shape[0]
    s = v.shape[1]
    out = np.empty(p)
    step = max(1, chunk // s)
    for a in range(0, p, step):
        arg = deltas[a:a + step] @ v
        out[a:a + step] = _q_func(np.sqrt(np.maximum(arg, 0.0))).mean(axis=-1)
    return out


def upep_mmse_semianalytic(delta, n0: float, n_tx: int, n_rx: int, sigma_x2: float,
                           samples: int = 10**6, rng=None) -> float:
    """Monte Carlo average of ``Q(sqrt(sum_n V_n Delta_n))`` over ``V_n``.

    For a single nonzero ``Delta_n`` this is the worst-case-event estimate.
    Several nonzero entries use independent ``V_n`` draws per subcarrier.
    """
    rng = np.random.default_rng(rng)
    delta = np.asarray(delta, dtype=float)
    if not np.any(delta > 0):
        return 0.5
    v = np.stack([v_samples(draw_channel_matrices(n_tx, n_rx, samples, rng), n0, sigma_x2)
                  for _ in range(delta.size)])
    return float(_semianalytic_from_v(delta[None], v)[0])


# union bounds ----------------------------------------------------------------

@dataclass
class UnionTerms:
    """Distance profiles of all ordered pairs, bucketed.

    ``deltas`` ``(P, N)`` holds sorted profiles, ``weights`` the summed
    Hamming distances of the pairs in each bucket and ``counts`` their
    number. ``norm`` is ``n_b * n(x)``.
    """

    deltas: np.ndarray
    weights: np.ndarray
    counts: np.ndarray
    norm: int

    @property
    def n_pairs(self) -> int:
        """Ordered pairs ``x != e`` represented."""
        zero = ~np.any(self.deltas > 0, axis=1)
        return int(self.counts[~zero].sum())

    def abep(self, upep: np.ndarray) -> float:
        return float(min(0.5, (self.weights * upep).sum() / self.norm))


def _bucket(deltas, weights, counts, sort: bool):
    key = np.round(deltas, DELTA_DECIMALS)
    if sort:
        key = np.sort(key, axis=1)
    uniq, inv = np.unique(key, axis=0, return_inverse=True)
    inv = inv.reshape(-1)
    w = np.bincount(inv, weights=weights, minlength=len(uniq))
    c = np.bincount(inv, weights=counts, minlength=len(uniq))
    if len(uniq) > PROFILE_CAP:
        raise CapacityError(
            f"{len(uniq)} distinct distance profiles exceed cap {PROFILE_CAP}; reduce T, K or M"
        )
    return uniq, w, c


def antenna_pair_terms(codec):
    """Per-antenna ordered pairs (including ``x = e``): profiles, Hamming, counts."""
    book = codec.codebook
    bits = codec.codebook_bits
    cb = book.shape[0]
    if cb * cb > 1 << 26:
        raise CapacityError(f"per-antenna codebook of {cb} entries is too large to enumerate")
    d = np.abs(book[:, None, :] - book[None, :, :]) ** 2
    ham = (bits[:, None, :] != bits[None, :, :]).sum(axis=-1)
    return _bucket(d.reshape(cb * cb, -1), ham.reshape(-1).astype(float),
                   np.ones(cb * cb), sort=False)


def ml_union_terms(codec, n_tx: int) -> UnionTerms:
    """Joint-pair profiles for ``T`` antennas built from per-antenna pair buckets.

    Adding one antenna sums aligned profiles, multiplies counts and combines
    Hamming weights as ``w_a c_b + w_b c_a``.
    """
    d1, w1, c1 = antenna_pair_terms(codec)
    d, w, c = d1, w1, c1
    for _ in range(1, n_tx):
        dd = (d[:, None, :] + d1[None, :, :]).reshape(-1, d.shape[1])
        ww = (w[:, None] * c1[None, :] + c[:, None] * w1[None, :]).reshape(-1)
        cc = (c[:, None] * c1[None, :]).reshape(-1)
        d, w, c = _bucket(dd, ww, cc, sort=False)
    d, w, c = _bucket(d, w, c, sort=True)
    return UnionTerms(d, w, c, codec.p * n_tx * codec.size ** n_tx)


def mmse_union_terms(codec) -> UnionTerms:
    d, w, c = antenna_pair_terms(codec)
    d, w, c = _bucket(d, w, c, sort=True)
    return UnionTerms(d, w, c, codec.p * codec.size)


def _n0f_grid(cfg, snr_db):
    return [snr_to_noise(float(s), cfg)[1] for s in np.atleast_1d(snr_db)]


def abep_ml_union(cfg: SystemConfig, snr_db) -> np.ndarray:
    """Union upper bound on the ML bit error probability, clipped at 1/2."""
    terms = ml_union_terms(cfg.codec, cfg.n_tx)
    active = terms.weights > 0
    return np.array([terms.abep(np.where(active, _upep_rows(terms, n0, cfg.n_rx, active), 0.0))
                     for n0 in _n0f_grid(cfg, snr_db)])


def _upep_rows(terms, n0, exponent, active):
    out = np.zeros(len(terms.deltas))
    out[active] = upep_from_deltas(terms.deltas[active], n0, exponent)
    return out


def abep_mmse(cfg: SystemConfig, snr_db, estimator: str = "bound", samples: int = 10**6,
              rng=None) -> np.ndarray:
    """Per-antenna union estimate of the simple-MMSE bit error probability.

    ``estimator`` is ``"bound"`` (exponential ``Z_n``, requires ``T = R``)
    or ``"semianalytic"`` (Monte Carlo ``V_n`` with ``samples`` channel
    draws per subcarrier, the same draws reused at every SNR).
    """
    if estimator not in ("bound", "semianalytic"):
        raise ConfigError(f"unknown MMSE estimator {estimator!r}")
    terms = mmse_union_terms(cfg.codec)
    active = terms.weights > 0
    n = cfg.subblock_n
    if estimator == "bound":
        if cfg.n_tx != cfg.n_rx:
            warnings.warn("MMSE UPEP bound assumes T = R", RuntimeWarning, stacklevel=2)
        return np.array([terms.abep(_upep_rows(terms, n0, 1, active))
                         for n0 in _n0f_grid(cfg, snr_db)])
    rng = np.random.default_rng(rng)
    h = draw_channel_matrices(cfg.n_tx, cfg.n_rx, samples * n, rng)
    out = []
    for n0 in _n0f_grid(cfg, snr_db):
        v = v_samples(h, n0, cfg.sigma_x2).reshape(n, samples)
        upep = np.zeros(len(terms.deltas))
        upep[active] = _semianalytic_from_v(terms.deltas[active], v)
        out.append(terms.abep(upep))
    return np.array(out)


THEORY_KINDS = ("ml_union", "mmse_bound", "mmse_semianalytic")


def theory_curve(cfg: SystemConfig, snr_grid, kind: str, seed: int = 0,
                 samples: int = 10**5) -> list:
    """``[(snr_db, abep), ...]`` for one of :data:`THEORY_KINDS`."""
    grid = [float(s) for s in snr_grid]
    if kind == "ml_union":
        vals = abep_ml_union(cfg, grid)
    elif kind == "mmse_bound":
        vals = abep_mmse(cfg, grid, "bound")
    elif kind == "mmse_semianalytic":
        vals = abep_mmse(cfg, grid, "semianalytic", samples=samples, rng=seed)
    else:
        raise ConfigError(f"unknown theory curve {kind!r}; expected one of {THEORY_KINDS}")
    return [(s, float(v)) for s, v in zip(grid, vals)]


# slopes, rates, complexity ---------------------------------------------------

def diversity_order_estimate(snr_db, ber, errors=None, threshold: float = 1e-3) -> float:
    """High-SNR slope ``-d log10(BER) / d(SNR_dB / 10)``.

    Uses the two highest-SNR points with ``0 < BER < threshold`` (and a
    nonzero error count when ``errors`` is given).
    """
    snr = np.asarray(snr_db, dtype=float)
    ber = np.asarray(ber, dtype=float)
    ok = (ber > 0) & (ber < threshold)
    if errors is not None:
        ok &= np.asarray(errors) > 0
    idx = np.flatnonzero(ok)
    if idx.size < 2:
        raise NotComputableError(
            f"need two points with 0 < BER < {threshold:g}, found {idx.size}")
    idx = idx[np.argsort(snr[idx])][-2:]
    (s1, s2), (b1, b2) = snr[idx], ber[idx]
    return float(-(math.log10(b2) - math.log10(b1)) / ((s2 - s1) / 10.0))


def spectral_efficiency(cfg: SystemConfig) -> float:
    """Bits/s/Hz as ``m T / (N_F + C_p)`` (Alamouti: ``N_F log2 M / (N_F + C_p)``)."""
    if cfg.scheme == "alamouti":
        return cfg.nfft * cfg.constellation.bits_per_symbol / (cfg.nfft + cfg.cp_len)
    return cfg.bits_per_antenna * cfg.n_tx / (cfg.nfft + cfg.cp_len)


def printed_table_spectral_efficiency(cfg: SystemConfig) -> float:
    """The complexity-table expression ``N T p / (K (N_F + C_p))``, shown for comparison."""
    codec = cfg.codec
    return cfg.subblock_n * cfg.n_tx * codec.p / (cfg.subblock_k * (cfg.nfft + cfg.cp_len))


def complexity_count(cfg: SystemConfig, detector: str | None = None) -> int | None:
    """Complex multiplications per subcarrier from the complexity-table formulas.

    OSIC entries are the tabulated upper bounds. Returns ``None`` where the
    table has no entry (Alamouti).
    """
    detector = detector or cfg.detector
    t, r = cfg.n_tx, cfg.n_rx
    m = cfg.constellation.order
    if detector.startswith("vblast_"):
        return {
            "vblast_ml": r * (t + 1) * m ** t,
            "vblast_mmse": t ** 3 + 2 * t ** 2 * r + t * (r + m),
            "vblast_mmse_osic": t ** 4 + t ** 3 * (2 * r + 3) + 2 * t ** 2 * (r + 1) + t * (2 * r + m),
        }[detector]
    if detector == "alamouti":
        return None
    k = cfg.subblock_k
    c = 1 << int(math.floor(math.log2(comb(cfg.subblock_n, k, exact=True))))
    table = {
        "ml": r * (t + 1) * (c * m ** k) ** t,
        "near_ml": r * (t + 1) * (m + 1) ** t,
        "mmse_simple": 2 * t ** 3 + 5 * t ** 2 * r + t * r + c * m ** k,
        "mmse_llr": 2 * t ** 3 + 5 * t ** 2 * r + t * (r + m + 1),
        "mmse_llr_osic": t ** 4 + t ** 3 * (2 * r + 3) + t ** 2 * (4 * r + 3) + t * (3 * r + m + 1),
    }
    if detector not in table:
        raise ConfigError(f"unknown detector {detector!r}")
    return table[detector]


__all__ = [
    "UnionTerms", "THEORY_KINDS", "upep_ml", "upep_from_deltas", "pair_deltas",
    "upep_mmse_bound", "upep_mmse_semianalytic", "v_samples", "abep_ml_union",
    "abep_mmse", "ml_union_terms", "mmse_union_terms", "theory_curve",
    "diversity_order_estimate", "spectral_efficiency",
    "printed_table_spectral_efficiency", "complexity_count",
]
