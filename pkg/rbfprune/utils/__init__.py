"""
Utility modules for rbfprune (logging, IO, configuration).
"""
