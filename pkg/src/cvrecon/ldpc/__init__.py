"""Protograph LDPC codes: construction, encoding, rate adaptation, decoding."""
from .construction import (ConstructionError, ExpandedCode, expand_protograph, export_h,
                           has_four_cycles, lift_for_length, load_h)
from .decoder import DecodeResult, TannerGraph, decode, decode_llrs
from .encoder import EncoderError, SystematicEncoder
from .protograph import Protograph, default_protograph, load_base_matrix, save_base_matrix
from .rate import (InfeasibleRateError, InvalidRateError, RateAdaptation, RateError,
                   choose_sp, sp_counts)
from .verify import ProtocolError, toeplitz_digest, verify

__all__ = [
    "ConstructionError", "ExpandedCode", "expand_protograph", "export_h", "has_four_cycles",
    "lift_for_length", "load_h", "DecodeResult", "TannerGraph", "decode", "decode_llrs",
    "EncoderError", "SystematicEncoder", "Protograph", "default_protograph",
    "load_base_matrix", "save_base_matrix", "InfeasibleRateError", "InvalidRateError",
    "RateAdaptation", "RateError", "choose_sp", "sp_counts", "ProtocolError",
    "toeplitz_digest", "verify",
]
