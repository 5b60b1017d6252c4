from __future__ import annotations


def ssp_rk3_step(u, dt, rhs):
    """One step of the three-stage, third-order SSP Runge-Kutta method.

    ``u`` can be anything supporting addition and scalar multiplication
    (floats, numpy arrays); ``rhs`` maps a state to its time derivative.
    """
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    u1 = u + dt * rhs(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * rhs(u1))
    return u / 3.0 + (2.0 / 3.0) * (u2 + dt * rhs(u2))
