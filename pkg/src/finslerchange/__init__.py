"""Finsler tensor calculus with exact truncated-Taylor differentiation,
and a verification harness for Randers-type conformal metric changes."""

from .jets import Jet, JetDomainError, JetError, JetOrderError, lift

__version__ = "0.1.0"

__all__ = [
    "Jet",
    "JetError",
    "JetOrderError",
    "JetDomainError",
    "lift",
    "__version__",
]
