"""portraitgs: differentiable articulated Gaussian-splat portrait fitting."""

__version__ = "0.1.0"
