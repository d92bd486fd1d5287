"""Exact vertex sampling from polytopes using only coin flips of the hidden point."""
