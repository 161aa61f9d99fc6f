"""specsense: energy detection under noise-power uncertainty.

A toolkit for spectrum-sensing detection when the receiver's noise power is
only known to lie in an interval: the conventional energy detector driven by
a maximum-likelihood noise estimate, three averaged-likelihood detectors
built on a uniform noise-power prior, Monte Carlo threshold calibration, and
a reproducible ROC/experiment harness with CSV + figure reports.
"""

__version__ = "0.1.0"

from .errors import BracketingError, ConfigError, PrecisionLossError

__all__ = ["__version__", "BracketingError", "ConfigError", "PrecisionLossError"]
