"""
Reference oracles: dense exact diagonalization and METTS.

- ed_thermal / ed_evolve: density matrices e^{-beta H}/Z and U rho U^dagger
- taylor_purification: independent e^{-beta H/2} purification of the identity
- reduced_density_matrix: partial trace of an enumerated variational state
- metts_run: minimally entangled typical thermal states
"""

default_app_config = 'apps.oracles.apps.OraclesConfig'
