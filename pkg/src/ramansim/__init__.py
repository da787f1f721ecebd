"""Two-mode transient stimulated Raman scattering with shaped pump pulses."""

__version__ = "0.1.0"
