"""
Variational wave functions over doubled configurations.

- RbmoState: restricted-Boltzmann-machine operator (holomorphic, AuxZ)
- ArnnoState: autoregressive LSTM operator in the AuxZ (with mean-field
  mask) or Hadamard-rotated AuxX basis
- MeanFieldState: any AuxZ network times a per-site pair factor

Every architecture has an exact identity-state initialization.

Usage:
    from apps.ansatz.rbmo import RbmoState

    state = RbmoState.identity(n_sites=4, alpha=1)
    log_psi = state.log_amplitude(configs)
"""

default_app_config = 'apps.ansatz.apps.AnsatzConfig'
