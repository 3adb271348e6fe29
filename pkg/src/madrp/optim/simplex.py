import numpy as np


def project_simplex(v):
    """Euclidean projection of ``v`` onto the unit simplex (sort-and-threshold)."""
    v = np.asarray(v, dtype=np.float64).reshape(-1)
    n = v.size
    if n == 0:
        raise ValueError("cannot project an empty vector")
    if np.all(v >= 0.0) and np.sum(v) == 1.0:
        return v.copy()
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, n + 1)
    rho = np.nonzero(u - css / k > 0.0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    x = np.maximum(v - theta, 0.0)
    # absorb rounding so the output sums to one
    x[np.argmax(x)] += 1.0 - x.sum()
    return x
