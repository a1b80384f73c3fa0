"""Doppler-robust Rydberg pulse protocols.

Subpackages by concern: `atomdata` (species data, wavevectors, thermal
distributions), `schedule` (pi-2Npi-pi and comparator pulse sequences),
`dynamics` (time-dependent Hamiltonians and fixed-step integration),
`analytics` (phase laws, gate extraction, error metrics, thermal sweeps),
`service` (HTTP API) and `cli` (thin command-line client).
"""

__version__ = "0.1.0"
