"""
Cameras, ray sampling, compositing and the coarse-to-fine renderer.
"""
