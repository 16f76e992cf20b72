"""
Explicit Runge-Kutta steppers on flat parameter vectors
"""
from enum import Enum
from typing import Callable

import numpy as np


class Integrator(str, Enum):
    EULER = 'euler'
    RK2 = 'rk2'
    RK4 = 'rk4'


Derivative = Callable[[np.ndarray], np.ndarray]


def euler_step(theta: np.ndarray, dt: float, f: Derivative) -> np.ndarray:
    return theta + dt * f(theta)


def rk2_step(theta: np.ndarray, dt: float, f: Derivative) -> np.ndarray:
    """Heun's method."""
    k1 = f(theta)
    k2 = f(theta + dt * k1)
    return theta + 0.5 * dt * (k1 + k2)


def rk4_step(theta: np.ndarray, dt: float, f: Derivative) -> np.ndarray:
    k1 = f(theta)
    k2 = f(theta + 0.5 * dt * k1)
    k3 = f(theta + 0.5 * dt * k2)
    k4 = f(theta + dt * k3)
    return theta + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_STEPPERS = {
    Integrator.EULER: euler_step,
    Integrator.RK2: rk2_step,
    Integrator.RK4: rk4_step,
}


def integrate_step(theta: np.ndarray, dt: float, f: Derivative, integrator: Integrator) -> np.ndarray:
    return _STEPPERS[Integrator(integrator)](theta, dt, f)
