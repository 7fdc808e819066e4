"""
Synthetic articulated scenes, their analytic renderer and ground-truth
correspondences.
"""
