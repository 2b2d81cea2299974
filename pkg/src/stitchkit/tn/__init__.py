"""Tensor-network backend: MPS sampling, thermal MPOs and MPDO transfer matrices."""
