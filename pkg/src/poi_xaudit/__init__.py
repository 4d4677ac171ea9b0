"""Explainable next-POI recommender with perturbation audits of its explanations."""

__version__ = "0.1.0"
