"""Independent oracles shared by the spectral and acceptance tests."""

import numpy as np
from scipy.optimize import brentq


def brute_force_spectra(n, k, rng, count):
    """Spectra R_1 = 2n, R_2..R_k (the rest equal 1) satisfying both power-sum constraints.

    trace:  R = sum R_j - k + 2n + 1
    square: (2n+1)R - 2n(4n+1) = sum R_j^2 + (2n-k+1) - 4n^2
    R_2..R_{k-1} are drawn at random and R_k solves the resulting quadratic.
    Returns (R, spectra) with spectra of shape (count, k).
    """
    if k == 1:
        spectra = np.full((count, 1), 2.0 * n)
    else:
        batches = []
        while sum(len(b) for b in batches) < count:
            free = np.column_stack([np.full(4 * count, 2.0 * n),
                                    rng.uniform(0.0, 2 * n + 1.0, size=(4 * count, k - 2))])
            s, q = free.sum(axis=1), np.sum(free ** 2, axis=1)
            # R_k^2 - (2n+1) R_k + c = 0
            c = q - (2 * n + 1) * (s - k + 2 * n + 1) + 2 * n * (4 * n + 1) + 2 * n - k + 1 - 4 * n * n
            disc = (2 * n + 1) ** 2 - 4 * c
            ok = disc >= 0
            sign = rng.choice([-1.0, 1.0], size=ok.sum())
            root = ((2 * n + 1) + sign * np.sqrt(disc[ok])) / 2
            batches.append(np.column_stack([free[ok], root]))
        spectra = np.vstack(batches)[:count]
    R = spectra.sum(axis=1) - k + 2 * n + 1
    a7 = (2 * n + 1) * R - 2 * n * (4 * n + 1) - (np.sum(spectra ** 2, axis=1) + 2 * n - k + 1 - 4 * n * n)
    if not np.all(np.abs(a7) <= 1e-10 * np.maximum(1.0, R * R)):
        raise AssertionError("oracle spectra violate the square constraint")
    return R, spectra


def system_residuals(R, n, k1, k2, r1, r2):
    e1 = k1 * r1 + k2 * r2 - (R - 2 * n - 1)
    e2 = k1 * r1 ** 2 + k2 * r2 ** 2 - ((2 * n + 1) * R - 8 * n * n - 2 * n - 1)
    return e1, e2


def grid_oracle(R, n, k1, k2):
    s1 = R - 2 * n - 1
    s2 = (2 * n + 1) * R - 8 * n * n - 2 * n - 1

    def f(r1):
        r2 = (s1 - k1 * r1) / k2
        return k1 * r1 ** 2 + k2 * r2 ** 2 - s2

    grid = np.linspace(-10 * (abs(R) + 10), 10 * (abs(R) + 10), 200_001)
    vals = f(grid)
    roots = [float(x) for x in grid[vals == 0.0]]
    for i in np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]:
        roots.append(brentq(f, grid[i], grid[i + 1], xtol=1e-14))
    # a tangential (double) root shows no sign change; f' = 2 k1 (R1 - R2) locates the minimum
    def slope(r1):
        return r1 - (s1 - k1 * r1) / k2

    x_min = brentq(slope, grid[0], grid[-1], xtol=1e-15)
    if abs(f(x_min)) < 1e-9 * max(1.0, abs(s2)) and all(abs(x_min - r) > 1e-6 for r in roots):
        roots.append(x_min)
    return sorted(roots)
