"""Numerical toolkit for vector-valued variational time-frequency analysis.

Modules
-------
core        coordinate spaces, sampled signals, generators, file IO
variation   r-variation seminorms of finite paths
fourier     partial Fourier integrals and maximal / variational operators
wavepacket  smooth bumps, the two-sided multiplier, truncated wave packets
tfs         time-frequency-scale geometry: trees, strips, fields, pullbacks
outersize   local sizes, outer sizes, super-level covers, outer quasinorms
embedding   wave-packet embedding maps and their comparison checks
cli         the ``vc`` command line driver
"""

from .core import (
    ConfigurationError,
    FrequencySelection,
    NormedSpace,
    SampledSignal,
    SequenceSignal,
    SignalParseError,
    duality_pairing,
    make_signal,
    norm_eval,
    signal_read,
    signal_write,
)
from .variation import Path, linf_norm, variation_norm, variation_norm_bruteforce

__version__ = "0.1.0"

__all__ = [
    "ConfigurationError",
    "FrequencySelection",
    "NormedSpace",
    "Path",
    "SampledSignal",
    "SequenceSignal",
    "SignalParseError",
    "duality_pairing",
    "linf_norm",
    "make_signal",
    "norm_eval",
    "signal_read",
    "signal_write",
    "variation_norm",
    "variation_norm_bruteforce",
    "__version__",
]
