"""A compact physically based renderer with six light transport integrators.

The package renders procedural test scenes and Mitsuba-flavored XML scene
files with unidirectional and bidirectional path tracing, volumetric
variants, photon mapping, and primary-sample-space Metropolis, sharing one
scene model, one BSDF catalog, and one deterministic RNG.
"""

__version__ = "0.1.0"
