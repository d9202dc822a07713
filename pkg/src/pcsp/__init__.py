"""Workbench for symmetric Boolean promise constraint satisfaction:
template classification, sandwich solvers, polymorphism algebra, and
machine-checkable non-existence certificates for bounded doubly cyclic
polymorphisms."""

__version__ = "0.1.0"
