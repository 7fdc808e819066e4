"""
Optimization and the three-stage pipeline: pretrain, projection, finetune.
"""
