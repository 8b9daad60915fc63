"""Self-Classifier - single-stage unsupervised classification with a uniform-prior loss."""

__version__ = "1.0.0"
