"""Tests for the encoders, fusion variants and heads."""
