"""Microwave/optical output-mode entanglement and teleportation fidelity for an
electro-optomechanical transducer."""

__version__ = "0.1.0"
