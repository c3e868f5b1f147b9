"""Simulation harness: contact models, scenarios, closed loop, datasets."""
