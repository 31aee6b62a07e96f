"""Exception types raised by the library.

Everything derives from :class:`AiotPhyError` so callers can catch broadly;
individual types match the error contracts of the operations that raise them.
"""


class AiotPhyError(ValueError):
    """Base class for all library errors."""


# codec
class UnsupportedLength(AiotPhyError):
    """CRC length not in the supported nested set {6, 11, 16}."""


class BlockTooShort(AiotPhyError):
    """Block shorter than (or equal to) the CRC length being checked."""


class MessageTooShort(AiotPhyError):
    """Tail-biting encoding needs at least K-1 message bits."""


class LengthMismatch(AiotPhyError):
    """Input length inconsistent with the configured codeword/metric size."""


# line codes
class InvalidM(AiotPhyError):
    """Subcarrier cycle count must be one of {2, 4, 8}."""


class UnsupportedKind(AiotPhyError):
    """Operation not defined for this line-code / modulation kind."""


# D2R modem
class OddBitCountForQpsk(AiotPhyError):
    """Square-QPSK maps bit pairs; the bit count must be even."""


class NonIntegerCyclesPerBit(AiotPhyError):
    """f_shift / bit_rate must give an integer (or MSK half-integer) cycle count."""


class NonIntegerOversampling(AiotPhyError):
    """Sample rate must be an integer multiple of the nominal chip rate."""


# R2D modem
class TooManyCheckChips(AiotPhyError):
    """check_chip_count exceeds half the chips per OFDM symbol."""


class ChipCountNotDivisible(AiotPhyError):
    """Line-coded chip count does not fill OFDM symbols evenly."""


class AllocationTooSmall(AiotPhyError):
    """LS synthesis residual above threshold for the allocated subcarriers."""


class ManchesterViolation(AiotPhyError):
    """No valid Manchester transition found in a bit."""


# channel / receiver
class RateMismatch(AiotPhyError):
    """Waveforms being combined have different sample rates."""


class HarmonicBeyondNyquist(AiotPhyError):
    """Requested harmonic frequency exceeds the Nyquist limit."""


# harness
class TargetNotBracketed(AiotPhyError):
    """Target BLER lies outside the measured range of the curve."""


class ConfigInvalid(AiotPhyError):
    """Experiment configuration violates a module invariant.

    ``key`` names the offending config entry.
    """

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key
