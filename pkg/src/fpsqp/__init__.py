"""Feasible-path SQP for optimization problems embedding differentiable surrogates."""

__version__ = "0.1.0"
