"""Deterministic V2V co-simulation of CACC platoons and collision warning."""

__version__ = "0.1.0"
