"""Scenario simulation of wind lulls, slews, curtailment and fleet adequacy."""

__version__ = "0.1.0"
