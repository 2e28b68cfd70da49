"""
Time-domain integrators used to cross-check the spectral predictions.
"""
from .rate_fit import fit_growth_rate
from .simulator import integrate_memory_quadrature, integrate_mode, simulate_physical

__all__ = ["fit_growth_rate", "integrate_memory_quadrature", "integrate_mode", "simulate_physical"]
