"""Numerical workbench for invariant complex structures, group harmonics,
vacuum energy functionals, and fiber-collapse reduction on principal bundles."""

__version__ = "0.1.0"
