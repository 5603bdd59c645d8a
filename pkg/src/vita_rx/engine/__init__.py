"""Tensor engine — dense float64 tensors, a reverse-mode tape and Adam."""
