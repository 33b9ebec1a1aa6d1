"""Simulation, control and estimation for a hybrid aerial/terrestrial quadrotor manipulator."""

__version__ = "0.1.0"
