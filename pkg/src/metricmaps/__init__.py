"""Relation-based maps between metric spaces.

Accuracy, precision and resolution of relations, Gromov-Hausdorff distance
over correspondences, zoom sequences and foveal maps, and dilation
structures with numerically checked axioms.
"""

__version__ = "0.1.0"
