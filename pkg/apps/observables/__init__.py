"""
Thermal expectation values of physical operators on purified states.

Usage:
    from apps.observables.estimators import estimate
    from apps.observables.suite import standard_observable_suite

    specs = standard_observable_suite(lattice, hamiltonian)
    results = {spec.name: estimate(state, spec, batch) for spec in specs}
"""

default_app_config = 'apps.observables.apps.ObservablesConfig'
