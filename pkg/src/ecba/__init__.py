"""Variational ground-state workbench for disordered Heisenberg spin chains.

The package covers the full pipeline: power-law disorder sampling,
strong-disorder decimation into a pairing plan, ansatz circuit construction
(emergent-coupling, hardware-efficient, and rainbow-chain variants), exact
statevector simulation, shot-based noisy simulation with twirling / readout
correction / zero-noise extrapolation, a sparse exact-diagonalization oracle,
square-lattice embedding, and an experiment CLI.
"""

__version__ = "0.1.0"
