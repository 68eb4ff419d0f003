"""Scoring service: conditional token log-likelihoods over HTTP."""

__version__ = "0.1.0"
