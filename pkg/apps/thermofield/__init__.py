"""
Doubled-space (thermofield) algebra.

Identity state, tilde conjugation, the thermofield Hamiltonian
H (x) 1 - 1 (x) H~, lifting of physical observables, and the Hadamard rotation
of the auxiliary basis.
"""

default_app_config = 'apps.thermofield.apps.ThermofieldConfig'
