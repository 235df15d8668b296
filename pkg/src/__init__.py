"""
radialwave-lab - numerical laboratory for radial focusing wave equations
"""

__version__ = "0.3.0"
