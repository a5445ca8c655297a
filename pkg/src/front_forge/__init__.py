"""Construction and verification of multi-front entire solutions of
bistable reaction-diffusion equations on rectangular boxes."""

__version__ = "0.1.0"
