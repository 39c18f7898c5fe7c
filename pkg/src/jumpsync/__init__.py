"""Synchronize sluggish stock jumps around ETF jumps."""
