"""Evaluation toolkit for cognitive-plausibility scoring and two-step task analysis.

Submodules
----------
mcg        Minimal Cognitive Grid scores (FSR, generality, performance match, plausibility)
twostep    two-step task simulator and trial-scheme files
agents     model-free / model-based / hybrid reference agents, stay signatures, fitting
logs       decision-log records and line-delimited file format
stats      negative log-likelihood summaries and Welch t-tests
roi        ROI beta-vector similarity
cli        command-line front end
"""

from cogeval.errors import ParseError, ValidationError

__version__ = "0.1.0"

__all__ = ["ParseError", "ValidationError", "__version__"]
