"""
Contour evolution of neural thermofield states.

- C1 (pite_step): projected imaginary-time steps, infidelity minimization
  against the Taylor-propagated state under prior sampling
- C2 (sr_step): stochastic reconfiguration, imaginary-time TDVP
- C3 (tvmc_step): real-time TDVP under the thermofield Hamiltonian

Shared pieces: local energies, QGT/force estimation, regularized solves,
Runge-Kutta steppers and a step-rejection retry policy.
"""

default_app_config = 'apps.evolution.apps.EvolutionConfigApp'
