"""Unit tests for syntax-fusion-lab."""
