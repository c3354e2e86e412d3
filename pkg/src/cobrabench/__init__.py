"""Ensemble regression by prediction-space neighborhood averaging.

The package bundles three from-scratch weak learners, the discrete
neighborhood aggregator built on top of them, a smooth softmax surrogate
of the aggregator's indicator weights with an analytic gradient for
threshold tuning, grid/randomized cross-validation baselines, and a
benchmark CLI that runs the whole protocol on housing CSVs.
"""

__version__ = "0.1.0"
