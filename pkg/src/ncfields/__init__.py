"""
Noncommutative Fields Toolkit
Deformed symplectic structures for free bosonic fields and chiral edge modes

Components:
- symplectic_core.py: deformed symplectic forms, brackets, dressing maps, commutator kernels
- spectra.py: dressed Hamiltonians, closed-form spectra and the eigen-oracle
- dynamics.py: exact and implicit-midpoint evolution, FFT frequency extraction
- chiral_edge.py: chiral boson models, Kac-Moody maps, filling factors, nonlinear dispersion
- reporting.py: sweep specs, tables and text serialization
- cli.py: `ncfields` command line
- config.py and config/: YAML defaults and run settings

Note: No barrel exports - import from the modules,
e.g., ncfields.spectra.closed_form_spectrum
"""

__version__ = "1.0.0"
