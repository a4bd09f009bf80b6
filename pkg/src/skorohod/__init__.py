"""Computations with Skorohod-differentiable measures on the line and their images."""
