"""Special functions, adaptive quadrature and reproducible random streams."""

from .special import (
    bessel_i0,
    bessel_i0e,
    bessel_k,
    bessel_ke,
    upper_incomplete_gamma_zero,
)
from .quadrature import QuadratureResult, integrate
from .random import RandomStream, sample_channels

__all__ = [
    "bessel_i0",
    "bessel_i0e",
    "bessel_k",
    "bessel_ke",
    "upper_incomplete_gamma_zero",
    "QuadratureResult",
    "integrate",
    "RandomStream",
    "sample_channels",
]
