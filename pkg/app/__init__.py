"""
Entropy toolkit for expansive symbolic systems.

Exact separated-set censuses, growth estimates, dimensional entropy of
cylinder trees, lowering constructions and factor-map checks.
"""

__version__ = "0.1.0"
