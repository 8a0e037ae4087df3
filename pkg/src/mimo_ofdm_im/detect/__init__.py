"""Receivers for MIMO-OFDM-IM and the classical MIMO-OFDM baselines."""

from ._common import DetectionResult, SubblockObservation
from .baselines import (
    VBLAST_VARIANTS,
    alamouti_combine,
    alamouti_detect,
    alamouti_encode,
    vblast_detect,
)
from .ml import (
    ML_FORMS,
    joint_codebook,
    ml_detect,
    ml_metrics,
    near_ml_detect,
    near_ml_posteriors,
    near_ml_scores,
    symbol_vector_priors,
    value_priors,
)
from .mmse import (
    MmseStats,
    activity_llr,
    llr_demap,
    mmse_estimates,
    mmse_filter,
    mmse_llr_detect,
    mmse_llr_osic_detect,
    mmse_simple_detect,
    osic_ordering_metric,
)

IM_DETECTORS = ("ml", "near_ml", "mmse_simple", "mmse_llr", "mmse_llr_osic")


def detect_subblocks(obs: SubblockObservation, codec, detector: str,
                     sigma_x2: float) -> DetectionResult:
    """Run one of the MIMO-OFDM-IM detectors by name."""
    if detector == "ml":
        return ml_detect(obs, codec)
    if detector == "near_ml":
        return near_ml_detect(obs, codec)
    if detector == "mmse_llr_osic":
        return mmse_llr_osic_detect(obs, codec, sigma_x2)
    if detector in ("mmse_simple", "mmse_llr"):
        stats = mmse_filter(obs.h, obs.n0, sigma_x2, check=False)
        xhat = mmse_estimates(stats, obs.y)
        if detector == "mmse_simple":
            return mmse_simple_detect(stats, xhat, codec)
        return mmse_llr_detect(stats, xhat, codec)
    raise ValueError(f"unknown MIMO-OFDM-IM detector {detector!r}; expected one of {IM_DETECTORS}")


__all__ = [
    "DetectionResult", "SubblockObservation", "MmseStats", "IM_DETECTORS",
    "ML_FORMS", "VBLAST_VARIANTS", "detect_subblocks",
    "ml_detect", "ml_metrics", "joint_codebook", "near_ml_detect",
    "near_ml_posteriors", "near_ml_scores", "symbol_vector_priors", "value_priors",
    "mmse_filter", "mmse_estimates", "mmse_simple_detect", "mmse_llr_detect",
    "mmse_llr_osic_detect", "llr_demap", "activity_llr", "osic_ordering_metric",
    "vblast_detect", "alamouti_encode", "alamouti_combine", "alamouti_detect",
]
