from .crc import (
    SUPPORTED_LENGTHS,
    CrcSpec,
    CrcVariant,
    crc_attach,
    crc_check,
    crc_derive,
    crc_remainder,
    poly_from_degrees,
    poly_from_hex,
)
from .conv import (
    K6_SETS,
    K7_BASE,
    K7_FOURTH,
    NestedCcConfig,
    Termination,
    cc_encode,
    cc_encode_swept,
    deinterleave_swept,
    encode_batch,
    swept_to_interlaced_perm,
)
from .viterbi import Trellis, decode_batch, get_trellis, viterbi_decode

__all__ = [
    "SUPPORTED_LENGTHS", "CrcSpec", "CrcVariant", "crc_attach", "crc_check",
    "crc_derive", "crc_remainder", "poly_from_degrees", "poly_from_hex",
    "K6_SETS", "K7_BASE", "K7_FOURTH", "NestedCcConfig", "Termination",
    "cc_encode", "cc_encode_swept", "deinterleave_swept", "encode_batch",
    "swept_to_interlaced_perm", "Trellis", "decode_batch", "get_trellis",
    "viterbi_decode",
]
