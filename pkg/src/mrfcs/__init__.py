"""MR fingerprinting at desk scale: phantom synthesis, Bloch dictionary
simulation, undersampled Cartesian acquisition, per-frame compressed-sensing
reconstruction, RCA metric learning, and dictionary-matching estimators."""

__version__ = "0.1.0"
