"""Tests for training, metrics and experiments."""
