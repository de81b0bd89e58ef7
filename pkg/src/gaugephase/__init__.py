"""Covariant-phase-space structures on lattice gauge field configurations.

The package computes Noether currents and charges, presymplectic two-forms
and their Poisson brackets, field-dependent gauge transformations, and basic
(horizontal + invariant) presymplectic structures built either from a
variational connection or from a dressing field, for Yang-Mills-type
theories and for first-order gravity with a cosmological constant, all
discretized on bounded rectangular coordinate patches.
"""

__version__ = "0.1.0"
