"""Tests for krylov-agp."""
