"""Apriori association-rule mining for tutoring-system session logs."""

__version__ = "0.1.0"
