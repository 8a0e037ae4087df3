"""
System configuration shared by the simulator, the theory calculators and
the command line.

Defaults follow the OFDM parameter set used throughout the package:
``N_F = 512``, ``C_p = 36``, ``L = 10`` uniform taps.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass
from functools import cached_property

from .constellation import MODULATIONS, make_constellation
from .exceptions import ConfigError
from .index_codec import INDEX_MODES, SubblockCodec

SCHEMES = ("mimo-ofdm-im", "vblast", "alamouti")
PATHS = ("frequency", "time")

SCHEME_DETECTORS = {
    "mimo-ofdm-im": ("ml", "near_ml", "mmse_simple", "mmse_llr", "mmse_llr_osic"),
    "vblast": ("vblast_ml", "vblast_mmse", "vblast_mmse_osic"),
    "alamouti": ("alamouti",),
}
DETECTORS = tuple(d for ds in SCHEME_DETECTORS.values() for d in ds)


def scheme_for_detector(detector: str) -> str:
    for scheme, dets in SCHEME_DETECTORS.items():
        if detector in dets:
            return scheme
    raise ConfigError(f"unknown detector {detector!r}; expected one of {DETECTORS}")


@dataclass(frozen=True)
class SystemConfig:
    scheme: str = "mimo-ofdm-im"
    detector: str = "ml"
    n_tx: int = 2
    n_rx: int = 2
    subblock_n: int = 4
    subblock_k: int = 2
    modulation: str = "bpsk"
    index_mode: str = "table"
    nfft: int = 512
    cp_len: int = 36
    channel: str = "uniform"
    taps: int = 10
    csi_q: float = math.inf
    path: str = "frequency"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        if self.detector not in SCHEME_DETECTORS[self.scheme]:
            raise ConfigError(
                f"detector {self.detector!r} does not fit scheme {self.scheme!r}; "
                f"choose from {SCHEME_DETECTORS[self.scheme]}"
            )
        if self.modulation not in MODULATIONS:
            raise ConfigError(f"unknown modulation {self.modulation!r}")
        if self.n_tx < 1 or self.n_rx < 1:
            raise ConfigError("antenna counts must be positive")
        if self.scheme == "alamouti" and self.n_tx != 2:
            raise ConfigError(f"Alamouti coding needs T=2, got T={self.n_tx}")
        if self.index_mode not in INDEX_MODES:
            raise ConfigError(f"unknown index mode {self.index_mode!r}")
        if self.scheme == "mimo-ofdm-im":
            if not 1 <= self.subblock_k <= self.subblock_n:
                raise ConfigError(
                    f"need 1 <= K <= N, got N={self.subblock_n}, K={self.subblock_k}"
                )
            if self.nfft % self.subblock_n:
                raise ConfigError(
                    f"N_F={self.nfft} is not a multiple of N={self.subblock_n}"
                )
            self.codec  # validates table availability
        if self.nfft < 1 or self.cp_len < 0 or self.cp_len > self.nfft:
            raise ConfigError("need N_F >= 1 and 0 <= C_p <= N_F")
        if self.channel not in ("uniform", "epa"):
            raise ConfigError(f"unknown channel profile {self.channel!r}")
        if self.channel == "epa" and self.taps != 4:
            raise ConfigError("EPA profile uses exactly L=4 taps")
        if self.taps < 1 or self.taps > self.nfft:
            raise ConfigError(f"invalid tap count L={self.taps}")
        if self.cp_len < self.taps - 1:
            raise ConfigError(f"cyclic prefix C_p={self.cp_len} shorter than channel memory L-1")
        if not self.csi_q > 0:
            raise ConfigError("CSI quality Q must be positive (inf for perfect CSI)")
        if self.path not in PATHS:
            raise ConfigError(f"unknown channel path {self.path!r}; expected one of {PATHS}")
        if self.path == "time" and self.scheme == "alamouti":
            raise ConfigError("time-domain validation path is not available for Alamouti")

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    @cached_property
    def constellation(self):
        return make_constellation(self.modulation)

    @cached_property
    def codec(self) -> SubblockCodec:
        if self.scheme != "mimo-ofdm-im":
            raise ConfigError(f"scheme {self.scheme!r} has no index-modulation codec")
        try:
            return SubblockCodec(self.subblock_n, self.subblock_k,
                                 self.constellation, self.index_mode)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @property
    def n_groups(self) -> int:
        return self.nfft // self.subblock_n

    @property
    def sigma_x2(self) -> float:
        """Average frequency-domain symbol energy per subcarrier and antenna."""
        if self.scheme == "mimo-ofdm-im":
            return self.subblock_k / self.subblock_n
        return 1.0

    @property
    def bits_per_antenna(self) -> int:
        """Bits carried per transmit antenna and OFDM symbol (``m``)."""
        if self.scheme == "mimo-ofdm-im":
            return self.n_groups * self.codec.p
        if self.scheme == "vblast":
            return self.nfft * self.constellation.bits_per_symbol
        # one Alamouti block carries two symbols over two OFDM symbols
        return self.nfft * self.constellation.bits_per_symbol // 2

    @property
    def bits_per_frame(self) -> int:
        """Information bits in one simulated frame across all antennas."""
        if self.scheme == "alamouti":
            return 2 * self.nfft * self.constellation.bits_per_symbol
        return self.n_tx * self.bits_per_antenna

    @property
    def energy_per_bit(self) -> float:
        """Total transmitted energy per information bit (unit-power samples)."""
        if self.scheme == "alamouti":
            # power split 1/2 per antenna, N_F log2(M) bits per OFDM symbol
            return (self.nfft + self.cp_len) / (self.nfft * self.constellation.bits_per_symbol)
        return (self.nfft + self.cp_len) / self.bits_per_antenna

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}


_FIELD_TYPES = {"n_tx": int, "n_rx": int, "subblock_n": int, "subblock_k": int,
                "nfft": int, "cp_len": int, "taps": int, "csi_q": float}
CONFIG_KEYS = tuple(f.name for f in dataclasses.fields(SystemConfig))


def coerce_config_values(values: dict) -> dict:
    """Convert string values (from files, env or overrides) to field types.

    Unknown keys raise :class:`ConfigError`.
    """
    out = {}
    for key, val in values.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown configuration key {key!r}; expected one of {CONFIG_KEYS}")
        kind = _FIELD_TYPES.get(key, str)
        if isinstance(val, str):
            try:
                val = kind(val.strip())
            except ValueError:
                raise ConfigError(f"bad value {val!r} for {key}") from None
        out[key] = val
    return out
