"""Predictive coating quality for thermal spray booths.

Core pieces: an lp-norm multiple-kernel epsilon-SVR engine, a streaming
sensor aggregator with deadband storage and feature extraction, a process
simulator standing in for the physical booth, and a FastAPI prediction
service with limit alerting.
"""

__version__ = "0.1.0"
