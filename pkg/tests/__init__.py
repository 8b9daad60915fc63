"""Test suite for selfclassifier."""
