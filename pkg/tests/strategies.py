import numpy as np
from hypothesis import strategies as st

from utils.measure_core import GridSpec, HatMeasure

_weights = st.one_of(st.just(0.0), st.floats(min_value=0.0, max_value=1.0, allow_nan=False))


def hat_measures(bins: int = 12):
    """Medidas arbitrarias (átomos incluidos) sobre una grilla chica."""
    grid = GridSpec(bins)
    return (
        st.lists(_weights, min_size=grid.size, max_size=grid.size)
        .filter(lambda w: sum(w) > 1e-3)
        .map(lambda w: HatMeasure(grid, np.asarray(w) / np.sum(w)))
    )


def bec_scalar(eps: float, lam, rho, x0: float = 1.0, steps: int = 20) -> list:
    """Recursión escalar x ← ε·λ(1 − ρ(1 − x)) de la BEC."""
    values = [x0]
    for _ in range(steps):
        values.append(eps * lam(1.0 - rho(1.0 - values[-1])))
    return values


def chain_scalar(eps: float, lam, rho, N: int, w: int, steps: int) -> list:
    """Cadena acoplada BEC escalar desde Δ₀, con y_v = 0 fuera de 1..2N."""
    n_w = 2 * N + w - 1
    x = [1.0] * n_w
    for _ in range(steps):
        checks = [1.0 - rho(1.0 - xi) for xi in x]
        y = [eps * lam(sum(checks[v:v + w]) / w) for v in range(2 * N)]
        x = [sum(y[i - k] for k in range(w) if 0 <= i - k < 2 * N) / w for i in range(n_w)]
    return x
