"""Numerical core: autodiff tensors, the Self-Classifier loss, model and optimizer."""
