"""
Numerical core of rbfprune: model, gradients, optimizer, training, pruning and oracles.
"""
