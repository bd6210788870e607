"""Torsional rigidity of planar convex bodies given by support functions.

The package solves the torsion problem (Delta U = -2, U = 0 on the boundary)
on bodies described by trigonometric support functions, evaluates its first
and second variations along Minkowski perturbations and checks the
Brunn-Minkowski and Poincare-type inequalities that follow from them.
Ellipses and ellipsoids have closed forms and serve as exact oracles.
"""

from .errors import *  # noqa: F401,F403
from .fields import BoundaryField, TestFunction, parse_test_function, random_test_function
from .support import (ConvexBody2D, TrigSupport, diameter, disk, ellipse, minkowski_combine,
                      random_body, scale, translate, validate_body, volume)
from .torsion import TorsionBundle, compute_bundle, first_variation, project_mean_zero
from .variation import second_variation, selfadjointness_check

__version__ = "0.1.0"
