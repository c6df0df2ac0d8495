"""Deterministic symbolic tabletop world: scenes, tasks, and a scripted VLA."""
