"""
Spectral stability analysis of heat conduction with Gamma-combination memory kernels.
"""
from .kernel_model import KernelSpec, classify_shape_k2, eval_gamma, eval_kernel, total_mass
from .stability import StabilityVerdict, VerdictClass, classify

__all__ = [
    "KernelSpec",
    "classify_shape_k2",
    "eval_gamma",
    "eval_kernel",
    "total_mass",
    "StabilityVerdict",
    "VerdictClass",
    "classify",
]
