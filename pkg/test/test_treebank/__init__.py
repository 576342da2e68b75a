"""Tests for trees, CoNLL-U, wordpieces and datasets."""
