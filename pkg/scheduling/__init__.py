"""Robust appointment scheduling with worst-case waiting-time guarantees."""
