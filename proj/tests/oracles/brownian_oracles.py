"""Independent reference values for the Brownian driver (numpy only).

1. E[max_{[0,1]} B] on a grid of spacing dt, and the continuum value sqrt(2/pi).
2. E[V_1] = E int L_1(x)^2 dx: analytic double integral
   int_0^1 int_0^1 (2 pi |u - v|)^{-1/2} du dv = 8 / (3 sqrt(2 pi)),
   checked against fine-grid histogram Monte Carlo with a dx sweep.
3. Conditional variance of iterated BM at t = 1: E|B~(1)| = sqrt(2/pi).
"""
import math
import numpy as np
from scipy import integrate

rng = np.random.default_rng(20261014)


def max_on_grid(dt, reps, chunk=2000):
    n = int(round(1 / dt))
    acc = []
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        z = rng.standard_normal((m, n)) * math.sqrt(dt)
        paths = np.cumsum(z, axis=1)
        acc.append(np.maximum(paths.max(axis=1), 0.0))
    v = np.concatenate(acc)
    return v.mean(), v.std(ddof=1) / math.sqrt(reps)


def ev1_histogram(dt, dx, reps, chunk=200):
    n = int(round(1 / dt))
    vals = []
    for start in range(0, reps, chunk):
        m = min(chunk, reps - start)
        z = rng.standard_normal((m, n)) * math.sqrt(dt)
        paths = np.cumsum(z, axis=1)
        for p in paths:
            idx = np.floor(p / dx).astype(np.int64)
            counts = np.bincount(idx - idx.min())
            occ = counts * dt / dx
            vals.append(np.sum(occ * occ) * dx)
    v = np.array(vals)
    return v.mean(), v.std(ddof=1) / math.sqrt(reps)


if __name__ == "__main__":
    print("sqrt(2/pi) =", math.sqrt(2 / math.pi))
    for k in (10, 14):
        m, se = max_on_grid(2.0 ** -k, 100000)
        print(f"E[max B] dt=2^-{k}: {m:.5f} +- {se:.5f}   (continuum - 0.5826 sqrt(dt) = "
              f"{math.sqrt(2/math.pi) - 0.5826 * 2 ** (-k/2):.5f})")
    analytic, _ = integrate.dblquad(lambda v, u: (2 * math.pi * abs(u - v)) ** -0.5 if u != v else 0.0,
                                    0, 1, 0, 1, epsabs=1e-10)
    print("E[V_1] analytic closed form 8/(3 sqrt(2 pi)) =", 8 / (3 * math.sqrt(2 * math.pi)))
    print("E[V_1] numerical double integral =", analytic)
    for dxk in (5, 6, 7):
        m, se = ev1_histogram(2.0 ** -16, 2.0 ** -dxk, 4000)
        print(f"E[V_1] MC dt=2^-16 dx=2^-{dxk}: {m:.4f} +- {se:.4f}")
    inner = np.abs(rng.standard_normal(10 ** 6))
    print("E|B~(1)| MC =", inner.mean(), " sqrt(2/pi) =", math.sqrt(2 / math.pi))
