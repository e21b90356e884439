"""Box-constrained derivative-free minimization: coarse grid search
followed by Nelder-Mead refinement.

The objectives here are Monte Carlo step functions evaluated under common
random numbers, so gradients are useless but function values are exactly
reproducible; a grid pass finds the right basin and a clipped simplex
polishes it. The refined optimum can never be worse than the grid
optimum: the incoming point is a vertex and the best-ever evaluation is
tracked.
"""

from __future__ import annotations

import numpy as np


def grid_values(lo: float, hi: float, points: int) -> np.ndarray:
    if points < 2:
        raise ValueError("grid needs at least 2 points per axis")
    return np.linspace(lo, hi, points)


def nelder_mead(
    f,
    x0,
    steps,
    bounds,
    max_iter: int = 200,
    f0: float | None = None,
    xatol: float = 1e-4,
    fatol: float = 1e-6,
):
    """Minimize ``f`` from ``x0`` with a simplex clipped to ``bounds``.

    Coefficients: reflection 1, expansion 2, contraction 0.5, shrink 0.5.
    Returns ``(x_best, f_best, n_evaluations)`` where the best pair is
    tracked over every evaluation ever made (including the start point),
    so refinement is monotone by construction.
    """
    x0 = np.asarray(x0, dtype=float)
    steps = np.asarray(steps, dtype=float)
    lo = np.array([b[0] for b in bounds], dtype=float)
    hi = np.array([b[1] for b in bounds], dtype=float)
    dim = x0.size

    def clip(x):
        return np.minimum(np.maximum(x, lo), hi)

    evals = 0
    best_x, best_f = None, np.inf

    def eval_at(x):
        nonlocal evals, best_x, best_f
        x = clip(x)
        fx = float(f(x))
        evals += 1
        if fx < best_f:
            best_f, best_x = fx, x.copy()
        return x, fx

    simplex = []
    x0c, f0c = (clip(x0), float(f0)) if f0 is not None else eval_at(x0)
    if f0 is not None:
        best_x, best_f = x0c.copy(), f0c
    simplex.append([x0c, f0c])
    for i in range(dim):
        x = x0c.copy()
        x[i] += steps[i] if x[i] + steps[i] <= hi[i] else -steps[i]
        simplex.append(list(eval_at(x)))

    for _ in range(max_iter):
        simplex.sort(key=lambda v: v[1])
        spread = max(np.max(np.abs(v[0] - simplex[0][0])) for v in simplex[1:])
        fspread = abs(simplex[-1][1] - simplex[0][1])
        if spread < xatol and fspread < fatol:
            break
        centroid = np.mean([v[0] for v in simplex[:-1]], axis=0)
        worst_x, worst_f = simplex[-1]

        xr, fr = eval_at(centroid + (centroid - worst_x))
        if simplex[0][1] <= fr < simplex[-2][1]:
            simplex[-1] = [xr, fr]
            continue
        if fr < simplex[0][1]:
            xe, fe = eval_at(centroid + 2.0 * (centroid - worst_x))
            simplex[-1] = [xe, fe] if fe < fr else [xr, fr]
            continue
        xc, fc = eval_at(centroid + 0.5 * (worst_x - centroid))
        if fc < worst_f:
            simplex[-1] = [xc, fc]
            continue
        x_best = simplex[0][0]
        simplex = [simplex[0]] + [
            list(eval_at(x_best + 0.5 * (v[0] - x_best))) for v in simplex[1:]
        ]

    return best_x, best_f, evals
