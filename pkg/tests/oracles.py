"""Independent reference implementations used as test oracles.

These are coded directly from the displayed fixed-anchor recurrences and
share no code with the package; they exist so the solver can be checked
against a second, separately written transcription.
"""

import numpy as np


def eagv_reference_fixed(G, z0, alpha0, R, steps):
    """Varying-step extragradient with the anchor pinned at z^0.

    Uses the unsimplified form of the step-size recurrence, which the
    package does not.
    """
    z = np.array(z0, dtype=float)
    z_init = z.copy()
    alpha = alpha0
    out = [z.copy()]
    for k in range(steps):
        beta = 1.0 / (k + 2)
        half = z + beta * (z_init - z) - alpha * G(z)
        z = z + beta * (z_init - z) - alpha * G(half)
        alpha = (
            alpha
            / (1 - alpha**2 * R**2)
            * (1 - (k + 2) ** 2 / ((k + 1) * (k + 3)) * alpha**2 * R**2)
        )
        out.append(z.copy())
    return out


def feg_reference_fixed(G, z0, R, rho, steps):
    """Fast extragradient with the anchor pinned at z^0."""
    z = np.array(z0, dtype=float)
    z_init = z.copy()
    alpha = 1.0 / R
    out = [z.copy()]
    for k in range(steps):
        beta = 1.0 / (k + 1)
        half = z + beta * (z_init - z) - (1 - beta) * (alpha + 2 * rho) * G(z)
        z = z + beta * (z_init - z) - alpha * G(half) - (1 - beta) * 2 * rho * G(z)
        out.append(z.copy())
    return out


def feg_reference_rho_deleted(G, z0, R, steps):
    """Fast extragradient display with every rho term removed."""
    z = np.array(z0, dtype=float)
    z_init = z.copy()
    alpha = 1.0 / R
    out = [z.copy()]
    for k in range(steps):
        beta = 1.0 / (k + 1)
        half = z + beta * (z_init - z) - (1 - beta) * alpha * G(z)
        z = z + beta * (z_init - z) - alpha * G(half)
        out.append(z.copy())
    return out


def max_rel_coord_error(points_a, points_b):
    """Worst per-coordinate relative deviation across two iterate lists."""
    worst = 0.0
    for a, b in zip(points_a, points_b):
        denom = np.maximum(np.abs(b), 1e-300)
        worst = max(worst, float(np.max(np.abs(a - b) / denom)))
    return worst
