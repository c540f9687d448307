"""
Shared utilities for CubicLab: logging, configuration and seeded sampling
"""
