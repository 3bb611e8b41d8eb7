"""Logging and run-configuration utilities."""
