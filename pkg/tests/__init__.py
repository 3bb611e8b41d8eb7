"""Test suite for it2synth."""
