"""Benchmark, jet and plasma configurations built on the core solver."""
