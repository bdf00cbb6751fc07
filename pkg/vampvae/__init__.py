"""VampPrior variational auto-encoders on a small reverse-mode autodiff core."""

__version__ = "1.0.0"
