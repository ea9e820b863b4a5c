"""Frequency-secured stochastic unit commitment toolkit.

Schedules energy, inertia, and primary frequency response together, treating
the largest power-infeed loss as a decision variable so that the system can
trade deloading of its biggest plant against the cost of carrying frequency
services.
"""

__version__ = "0.1.0"
