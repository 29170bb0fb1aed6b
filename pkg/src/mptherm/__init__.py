"""Finite-difference dynamics and theorem checks for micropolar porous
thermoelasticity with a relaxing (finite-speed) heat flux."""

__version__ = "0.1.0"
