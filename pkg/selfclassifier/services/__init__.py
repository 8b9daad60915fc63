"""Data generation, training, evaluation and reporting services."""
