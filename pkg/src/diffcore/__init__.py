"""
Reverse-mode primitives and the finite-difference harness.
"""
