"""High-order implicit leapfrog (LF_R) time stepping for the three-field
(p, E, H) Maxwell system on a discrete de Rham complex of Whitney forms."""

__version__ = "0.1.0"
