"""
Command implementations for the rbfprune CLI.
"""
