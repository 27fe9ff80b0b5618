"""Independent reference values for the two-layer front H = (1, 2) on [0, 1/2), [1/2, 1).

Single shooting on the slope angle with an adaptive high-order integrator,
layer by layer, and a root finder on (c, theta0). Used to freeze constants in
the Rust tests; rerun with `python3 front_oracle.py`.
"""
import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import fsolve

LAYERS = [(0.0, 0.5, 1.0), (0.5, 1.0, 2.0)]


def shoot(c, th0, mu):
    state = np.array([th0, 0.0])
    for lo, hi, h in LAYERS:
        sol = solve_ivp(
            lambda y, s: [(-c + h / np.cos(s[0])) / mu, np.tan(s[0])],
            (lo, hi), state, method="DOP853", rtol=1e-13, atol=1e-14)
        state = sol.y[:, -1]
    return state


def solve(mu, guess):
    def res(x):
        c, th0 = x
        th, q = shoot(c, th0, mu)
        return [th - th0, q]
    x = fsolve(res, guess, xtol=1e-14)
    return x


if __name__ == "__main__":
    for mu, guess in [(1.0, (1.6, 0.1)), (100.0, (1.5, 0.0)), (10.0, (1.5, 0.0))]:
        c, th0 = solve(mu, guess)
        print(f"mu={mu}: c={c:.15f} theta0={th0:.15f}")
    # derivative of c in mu at mu = 1 by central differences of the oracle
    d = 1e-4
    cp = solve(1.0 + d, (1.6, 0.1))[0]
    cm = solve(1.0 - d, (1.6, 0.1))[0]
    print(f"c'(1) ~ {(cp - cm) / (2 * d):.10f}")
