"""Symbolic systems, subsets, entropy estimators, lowering and factor maps."""
