"""Twin-thruster USV simulation with performance-based supervisory switching control."""

__version__ = "0.1.0"
