"""
Image similarity metrics and evaluation tables.
"""
