"""Historic (irregular) Birkhoff behaviour on symbolic systems.

Symbolic spaces and invariant measures, observables and certificates of
non-convergence, specification-style point constructions, pressure and
dimension numerics, and the doubling map of the circle.
"""

__version__ = "0.1.0"
