"""Test package for the entropy toolkit."""
