"""
Radiance field, projection module and their composition.
"""
