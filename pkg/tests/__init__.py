"""Tests for thermonet components."""
