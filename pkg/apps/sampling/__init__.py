"""
Configuration batches for Monte Carlo estimators.

- metropolis_sample: Markov chains on |psi|^2 with physical, auxiliary and
  joint-pair flips
- direct_sample: ancestral sampling of autoregressive states
- sample_prior / prior_density: Hamming-kernel prior around the identity
  support
- enumerate_all: exact backend over all 4^N configurations
"""

default_app_config = 'apps.sampling.apps.SamplingConfig'
