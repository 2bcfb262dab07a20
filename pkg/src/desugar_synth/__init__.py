"""Synthesis of desugaring rules by typed enumeration and testing."""
