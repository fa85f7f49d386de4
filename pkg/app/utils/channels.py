"""
Familias de canales BMS (BEC, BSC, BAWGN) ordenadas por degradación y
parametrizadas por entropía.
"""
import logging
import math
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np
from scipy.integrate import simpson
from scipy.optimize import brentq
from scipy.stats import norm

from utils.errors import ParameterRangeError
from utils.measure_core import (
    ATANH_CLAMP,
    GridSpec,
    HatMeasure,
    bec_measure,
    delta0,
    delta_inf,
    entropy,
    from_magnitudes,
)

logger = logging.getLogger(__name__)

ENTROPY_TOL = 1e-8

# Nodos de Simpson por celda para la media condicional del BAWGN
_SIMPSON_POINTS = 9

# Intervalo inicial de búsqueda de σ para el BAWGN
_SIGMA_BRACKET = (1e-2, 1e3)
_SIGMA_MAX = 1e12


class ChannelKind(str, Enum):
    BEC = "bec"
    BSC = "bsc"
    BAWGN = "bawgn"


@dataclass(frozen=True)
class ChannelFamily:
    """Familia c(h) de canales sobre una grilla dada."""

    kind: ChannelKind
    grid: GridSpec

    def __post_init__(self):
        object.__setattr__(self, "kind", ChannelKind(self.kind))

    def density(self, h: float, tol: float = ENTROPY_TOL) -> HatMeasure:
        """Medida del canal de la familia con entropía ``h``."""
        return density_from_param(self, param_from_entropy(self, h, tol).param)


@dataclass(frozen=True)
class ParamSolution:
    param: float
    entropy: float
    residual: float
    iterations: int


# =============================
# DENSIDADES
# =============================
def density_from_param(family: ChannelFamily, p: float) -> HatMeasure:
    """
    Medida del canal para su parámetro nativo.

    Parameters
    ----------
    family : ChannelFamily
    p : float
        BEC: ε ∈ [0, 1]; BSC: p ∈ [0, 1/2]; BAWGN: σ > 0 (σ = 0 y σ = ∞ se
        aceptan como límites Δ∞ y Δ₀).

    Returns
    -------
    HatMeasure
    """
    grid = family.grid
    if family.kind is ChannelKind.BEC:
        return bec_measure(grid, p)

    if family.kind is ChannelKind.BSC:
        if not 0.0 <= p <= 0.5:
            raise ParameterRangeError(f"La probabilidad de cruce debe estar en [0, 1/2]: {p}")
        return from_magnitudes(grid, [1.0 - 2.0 * p], [1.0])

    if math.isnan(p) or p < 0.0:
        raise ParameterRangeError(f"σ debe ser positivo: {p}")
    if p == 0.0:
        return delta_inf(grid)
    if math.isinf(p):
        return delta0(grid)
    return _bawgn_measure(grid, p)


@lru_cache(maxsize=8)
def _cell_edges(bins: int) -> np.ndarray:
    # Intervalos entre nodos consecutivos; conservan E[(M − t)⁺] en los nodos.
    edges = GridSpec(bins).nodes.copy()
    edges[-1] = ATANH_CLAMP
    return edges


def _bawgn_measure(grid: GridSpec, sigma: float) -> HatMeasure:
    # α ~ N(2/σ², 4/σ²); se integra por intervalo en m con α = 2·atanh(m)
    mean, scale = 2.0 / sigma ** 2, 2.0 / sigma
    edges = _cell_edges(grid.bins)
    alpha = 2.0 * np.arctanh(edges)

    lo, hi = alpha[:-1], alpha[1:]
    z_lo, z_hi = (lo - mean) / scale, (hi - mean) / scale
    positive = np.where(
        z_lo > 0.0,
        norm.sf(z_lo) - norm.sf(z_hi),
        norm.cdf(z_hi) - norm.cdf(z_lo),
    )
    negative = norm.sf((lo + mean) / scale) - norm.sf((hi + mean) / scale)
    cell_mass = np.clip(positive + negative, 0.0, None)
    tail = norm.sf((alpha[-1] - mean) / scale) + norm.sf((alpha[-1] + mean) / scale)

    # Media condicional dentro de cada celda (Simpson sobre la densidad en m)
    t = np.linspace(0.0, 1.0, _SIMPSON_POINTS)
    m = edges[:-1, None] + (edges[1:] - edges[:-1])[:, None] * t[None, :]
    a = 2.0 * np.arctanh(m)
    density = (norm.pdf((a - mean) / scale) + norm.pdf((-a - mean) / scale)) * 2.0 / (1.0 - m * m)
    weight = simpson(density, x=m, axis=1)
    first = simpson(density * m, x=m, axis=1)
    centers = (edges[:-1] + edges[1:]) / 2.0
    means = np.divide(first, weight, out=centers.copy(), where=weight > 0.0)
    means = np.clip(means, edges[:-1], edges[1:])

    magnitudes = np.append(means, 1.0)
    weights = np.append(cell_mass, tail)
    return from_magnitudes(grid, magnitudes, weights / weights.sum())


# =============================
# INVERSIÓN POR ENTROPÍA
# =============================
def param_from_entropy(family: ChannelFamily, h: float, tol: float = ENTROPY_TOL) -> ParamSolution:
    """
    Parámetro nativo cuyo canal cuantizado tiene entropía ``h``.

    BEC es cerrado (H = ε); BSC y BAWGN se resuelven con ``brentq`` sobre el
    mapa monótono parámetro → entropía.
    """
    if not 0.0 <= h <= 1.0:
        raise ParameterRangeError(f"La entropía debe estar en [0, 1]: {h}")

    if family.kind is ChannelKind.BEC:
        return _solution(family, h, h, 0)

    if family.kind is ChannelKind.BSC:
        if h in (0.0, 1.0):
            return _solution(family, 0.5 * h, h, 0)
        root, info = brentq(
            lambda p: entropy(density_from_param(family, p)) - h,
            0.0, 0.5, xtol=1e-15, full_output=True,
        )
        return _solution(family, root, h, info.iterations, tol)

    if h == 0.0:
        return _solution(family, 0.0, h, 0)
    if h == 1.0:
        return _solution(family, math.inf, h, 0)

    def residual(log_sigma: float) -> float:
        return entropy(_bawgn_measure(family.grid, math.exp(log_sigma))) - h

    lo, hi = (math.log(s) for s in _SIGMA_BRACKET)
    while residual(lo) > 0.0:
        lo -= math.log(10.0)
    while residual(hi) < 0.0:
        hi += math.log(10.0)
        if hi > math.log(_SIGMA_MAX):
            raise ParameterRangeError(f"No se pudo acotar σ para h = {h}")
    root, info = brentq(residual, lo, hi, xtol=1e-14, full_output=True)
    return _solution(family, math.exp(root), h, info.iterations, tol)


def _solution(family: ChannelFamily, param: float, h: float, iterations: int,
              tol: Optional[float] = None) -> ParamSolution:
    achieved = entropy(density_from_param(family, param))
    residual = abs(achieved - h)
    if tol is not None and residual >= tol:
        logger.warning(
            "Inversión de entropía imprecisa (%s, h=%.10f): residuo %.3e",
            family.kind.value, h, residual,
        )
    return ParamSolution(param=param, entropy=achieved, residual=residual, iterations=iterations)
