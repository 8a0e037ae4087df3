"""MIMO-OFDM with index modulation: link-level simulation and error-rate analysis."""

__version__ = "0.1.0"

from .config import SystemConfig  # noqa: E402
from .constellation import Constellation, demap_symbol, make_constellation, map_symbols  # noqa: E402
from .index_codec import (  # noqa: E402
    IndexCodec,
    SubblockCodec,
    pattern_decode,
    pattern_encode,
    subblock_decode,
    subblock_encode,
)

__all__ = [
    "SystemConfig", "Constellation", "make_constellation", "map_symbols", "demap_symbol",
    "IndexCodec", "SubblockCodec", "pattern_encode", "pattern_decode",
    "subblock_encode", "subblock_decode", "__version__",
]
