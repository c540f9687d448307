"""
CubicLab command line tools
"""
