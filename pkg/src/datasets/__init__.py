"""
Dataset, image and checkpoint I/O.
"""
