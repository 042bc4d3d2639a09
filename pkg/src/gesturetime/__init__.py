"""gesturetime: gesture-timing prediction from speech prosody.

Predicts per-frame communicative-gesture classes from acoustic feature
sequences with a small attention encoder-decoder, evaluates with a
shift/dilation-tolerant block-alignment metric, and ships a Markov baseline
plus a reproducible experiment harness.
"""

from .errors import (ConfigError, GestureTimeError, InputFormatError,
                     NumericError)

__version__ = "0.1.0"

__all__ = ["ConfigError", "GestureTimeError", "InputFormatError",
           "NumericError", "__version__"]
