"""
Álgebra cuantizada de medidas simétricas.

Cada medida se guarda sobre el eje de magnitudes m = |tanh(α/2)| ∈ [0, 1]:
B celdas interiores con centros (j + 0.5)/B y dos átomos exactos en m = 0
(Δ₀, canal inútil) y m = 1 (Δ∞, canal perfecto). El vector de masas
extendido tiene largo B + 2 y orden [atom0, interior..., atom1], de modo que
los nodos de depósito son {0, centros..., 1}.
"""
import logging
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Tuple, Union

import numpy as np
from scipy.special import entr

from utils.errors import DistributionError, GridMismatchError, ParameterRangeError

logger = logging.getLogger(__name__)

DEFAULT_BINS = 4096
DEFAULT_ORDER = 200
ATANH_CLAMP = 1.0 - 2.0 ** -40

MASS_TOL = 1e-12
COEFF_TOL = 1e-9

# Pares (m1, m2) evaluados por bloque en los productos de convolución
_PAIR_BLOCK = 1 << 20


# =============================
# GRILLA
# =============================
@dataclass(frozen=True)
class GridSpec:
    """Grilla uniforme de B celdas en m ∈ (0, 1)."""

    bins: int = DEFAULT_BINS

    def __post_init__(self):
        if isinstance(self.bins, bool) or not isinstance(self.bins, (int, np.integer)):
            raise ParameterRangeError(f"bins debe ser entero: {self.bins!r}")
        if self.bins < 2:
            raise ParameterRangeError(f"bins debe ser ≥ 2: {self.bins}")
        object.__setattr__(self, "bins", int(self.bins))

    @property
    def size(self) -> int:
        return self.bins + 2

    @property
    def centers(self) -> np.ndarray:
        return _grid_nodes(self.bins)[1:-1]

    @property
    def nodes(self) -> np.ndarray:
        return _grid_nodes(self.bins)


@lru_cache(maxsize=16)
def _grid_nodes(bins: int) -> np.ndarray:
    nodes = np.empty(bins + 2)
    nodes[0] = 0.0
    nodes[1:-1] = (np.arange(bins) + 0.5) / bins
    nodes[-1] = 1.0
    nodes.setflags(write=False)
    return nodes


# =============================
# MEDIDA
# =============================
@dataclass(frozen=True, eq=False)
class HatMeasure:
    """
    Medida de probabilidad simétrica cuantizada.

    Parameters
    ----------
    grid : GridSpec
        Grilla sobre la que vive la medida.
    masses : np.ndarray
        Vector extendido de largo B + 2: [atom0, interior..., atom1].
        Se valida (no negativo, suma 1) y se guarda como sólo lectura.
    """

    grid: GridSpec
    masses: np.ndarray

    def __post_init__(self):
        masses = np.array(self.masses, dtype=float)
        if masses.shape != (self.grid.size,):
            raise GridMismatchError(
                f"Se esperaban {self.grid.size} masas y llegaron {masses.shape}"
            )
        if not np.all(np.isfinite(masses)):
            raise DistributionError("La medida contiene masas no finitas")
        if masses.min() < -MASS_TOL:
            raise DistributionError(f"Masa negativa: {masses.min():.3e}")
        np.clip(masses, 0.0, None, out=masses)
        total = masses.sum()
        if abs(total - 1.0) > COEFF_TOL:
            raise DistributionError(f"La masa total debe ser 1 y es {total!r}")
        if total != 1.0:
            masses /= total
        masses.setflags(write=False)
        object.__setattr__(self, "masses", masses)

    @classmethod
    def from_parts(cls, grid: GridSpec, interior, atom0: float = 0.0, atom1: float = 0.0) -> "HatMeasure":
        interior = np.asarray(interior, dtype=float)
        if interior.shape != (grid.bins,):
            raise GridMismatchError(f"interior debe tener {grid.bins} celdas")
        return cls(grid, np.concatenate(([atom0], interior, [atom1])))

    @property
    def atom0(self) -> float:
        return float(self.masses[0])

    @property
    def atom1(self) -> float:
        return float(self.masses[-1])

    @property
    def interior(self) -> np.ndarray:
        return self.masses[1:-1]

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.masses)

    @property
    def is_atomic(self) -> bool:
        """True si toda la masa está en los átomos (clase BEC)."""
        return not np.any(self.interior)


def _same_grid(*measures: HatMeasure) -> GridSpec:
    grid = measures[0].grid
    for other in measures[1:]:
        if other.grid != grid:
            raise GridMismatchError(f"Grillas distintas: {grid.bins} vs {other.grid.bins}")
    return grid


def delta0(grid: GridSpec) -> HatMeasure:
    """Δ₀: toda la masa en m = 0."""
    masses = np.zeros(grid.size)
    masses[0] = 1.0
    return HatMeasure(grid, masses)


def delta_inf(grid: GridSpec) -> HatMeasure:
    """Δ∞: toda la masa en m = 1."""
    masses = np.zeros(grid.size)
    masses[-1] = 1.0
    return HatMeasure(grid, masses)


def bec_measure(grid: GridSpec, erasure: float) -> HatMeasure:
    """Medida atómica con masa ``erasure`` en m = 0 y el resto en m = 1."""
    if not 0.0 <= erasure <= 1.0:
        raise ParameterRangeError(f"La probabilidad de borrado debe estar en [0, 1]: {erasure}")
    masses = np.zeros(grid.size)
    masses[0] = erasure
    masses[-1] = 1.0 - erasure
    return HatMeasure(grid, masses)


# =============================
# DEPÓSITO DE MASA
# =============================
def _deposit(grid: GridSpec, targets: np.ndarray, weights: np.ndarray) -> np.ndarray:
    # Reparto en dos nodos vecinos que conserva el primer momento en m.
    # Un destino que cae exactamente en un nodo queda entero en ese nodo.
    # Grilla uniforme: el nodo izquierdo de m es ⌊m·B + 1/2⌋.
    nodes = grid.nodes
    k = np.floor(targets * grid.bins + 0.5).astype(np.intp)
    np.clip(k, 0, grid.size - 2, out=k)
    lo = nodes[k]
    frac = np.clip((targets - lo) / (nodes[k + 1] - lo), 0.0, 1.0)
    out = np.bincount(k, weights=weights * (1.0 - frac), minlength=grid.size)
    out += np.bincount(k + 1, weights=weights * frac, minlength=grid.size)
    return out


def from_magnitudes(grid: GridSpec, magnitudes, weights) -> HatMeasure:
    """
    Construye una medida depositando ``weights`` en ``magnitudes`` ∈ [0, 1].

    Cada masa se reparte entre los dos nodos vecinos preservando la media.
    """
    magnitudes = np.asarray(magnitudes, dtype=float).ravel()
    weights = np.asarray(weights, dtype=float).ravel()
    if magnitudes.shape != weights.shape:
        raise GridMismatchError("magnitudes y weights deben tener el mismo largo")
    if np.any((magnitudes < 0.0) | (magnitudes > 1.0)):
        raise ParameterRangeError("Las magnitudes deben estar en [0, 1]")
    return HatMeasure(grid, _deposit(grid, magnitudes, weights))


# =============================
# OPERADORES ⊛ Y ⊠
# =============================
Kernel = Callable[[np.ndarray, np.ndarray, np.ndarray], Iterable[Tuple[np.ndarray, np.ndarray]]]


def _variable_kernel(m1, m2, w):
    prod = m1 * m2
    gap = 1.0 - prod
    plus = (m1 + m2) / (1.0 + prod)
    minus = np.divide(np.abs(m1 - m2), gap, out=np.zeros(prod.shape), where=gap > 0.0)
    yield np.minimum(plus, 1.0), w * (1.0 + prod) / 2.0
    yield np.minimum(minus, 1.0), w * gap / 2.0


def _check_kernel(m1, m2, w):
    yield m1 * m2, w


def _pairwise(x: HatMeasure, y: HatMeasure, kernel: Kernel) -> HatMeasure:
    grid = _same_grid(x, y)
    nodes = grid.nodes
    sx, sy = x.support, y.support
    mx, px = nodes[sx], x.masses[sx]
    my, py = nodes[sy][None, :], y.masses[sy][None, :]

    out = np.zeros(grid.size)
    rows = max(1, _PAIR_BLOCK // len(sy))
    for start in range(0, len(sx), rows):
        m1 = mx[start:start + rows, None]
        w = px[start:start + rows, None] * py
        for targets, weights in kernel(m1, my, w):
            out += _deposit(grid, targets.ravel(), weights.ravel())
    return HatMeasure(grid, out)


def var_conv(x: HatMeasure, y: HatMeasure) -> HatMeasure:
    """
    Operador de nodo variable x ⊛ y.

    Para cada par de magnitudes (m₁, m₂) emite (m₁+m₂)/(1+m₁m₂) con peso
    (1+m₁m₂)/2 y |m₁−m₂|/(1−m₁m₂) con peso (1−m₁m₂)/2. Δ₀ es la identidad y
    Δ∞ absorbe.
    """
    return _pairwise(x, y, _variable_kernel)


def check_conv(x: HatMeasure, y: HatMeasure) -> HatMeasure:
    """
    Operador de nodo de chequeo x ⊠ y: ley del producto de magnitudes
    independientes. Δ∞ es la identidad y Δ₀ absorbe.
    """
    return _pairwise(x, y, _check_kernel)


# =============================
# POLINOMIOS DE MEDIDAS
# =============================
# Secuencia de coeficientes o un objeto con atributo ``coeffs`` (DegreePolynomial)
Coefficients = Union[Sequence[float], np.ndarray]


def distribution_coefficients(p: Coefficients) -> np.ndarray:
    """Coeficientes de ``p`` validados como distribución (≥ 0, suma 1)."""
    coeffs = np.asarray(getattr(p, "coeffs", p), dtype=float)
    if coeffs.ndim != 1 or coeffs.size == 0:
        raise DistributionError("El polinomio debe tener al menos un coeficiente")
    if np.any(coeffs < 0.0):
        raise DistributionError(f"Coeficiente negativo en {coeffs.tolist()}")
    if abs(coeffs.sum() - 1.0) > COEFF_TOL:
        raise DistributionError(f"Los coeficientes deben sumar 1 y suman {coeffs.sum()!r}")
    return coeffs


def _power(op, identity: HatMeasure, x: HatMeasure, n: int) -> HatMeasure:
    result, base = identity, x
    while n:
        if n & 1:
            result = op(result, base)
        n >>= 1
        if n:
            base = op(base, base)
    return result


def _poly(p: Coefficients, x: HatMeasure, op, identity: HatMeasure) -> HatMeasure:
    coeffs = distribution_coefficients(p)
    degrees = np.flatnonzero(coeffs)
    if len(degrees) == 1:
        return _power(op, identity, x, int(degrees[0]))

    acc = np.zeros(x.grid.size)
    power, degree = identity, 0
    for n in degrees:
        while degree < n:
            power = op(power, x)
            degree += 1
        acc += coeffs[n] * power.masses
    return HatMeasure(x.grid, acc)


def poly_var(p: Coefficients, x: HatMeasure) -> HatMeasure:
    """p^⊛(x) = Σ pₙ x^{⊛n} con x^{⊛0} = Δ₀."""
    return _poly(p, x, var_conv, delta0(x.grid))


def poly_check(p: Coefficients, x: HatMeasure) -> HatMeasure:
    """p^⊠(x) = Σ pₙ x^{⊠n} con x^{⊠0} = Δ∞."""
    return _poly(p, x, check_conv, delta_inf(x.grid))


def mixture(weights: Sequence[float], measures: Sequence[HatMeasure]) -> HatMeasure:
    """Combinación convexa Σ wᵢ xᵢ."""
    if len(weights) != len(measures) or not measures:
        raise GridMismatchError("mixture necesita tantos pesos como medidas")
    grid = _same_grid(*measures)
    weights = distribution_coefficients(weights)
    acc = np.zeros(grid.size)
    for w, x in zip(weights, measures):
        if w:
            acc += w * x.masses
    return HatMeasure(grid, acc)


# =============================
# FUNCIONALES LINEALES
# =============================
@lru_cache(maxsize=16)
def _entropy_weights(bins: int) -> np.ndarray:
    p = (1.0 - _grid_nodes(bins)) / 2.0
    w = (entr(p) + entr(1.0 - p)) / math.log(2.0)
    w[0], w[-1] = 1.0, 0.0
    w.setflags(write=False)
    return w


@lru_cache(maxsize=16)
def _bhattacharyya_weights(bins: int) -> np.ndarray:
    nodes = _grid_nodes(bins)
    w = np.sqrt(np.clip(1.0 - nodes * nodes, 0.0, None))
    w[0], w[-1] = 1.0, 0.0
    w.setflags(write=False)
    return w


@lru_cache(maxsize=4)
def _moment_table(bins: int, order: int) -> np.ndarray:
    exponents = 2 * np.arange(1, order + 1)
    table = _grid_nodes(bins)[:, None] ** exponents[None, :]
    table.setflags(write=False)
    return table


@lru_cache(maxsize=4)
def series_weights(order: int) -> np.ndarray:
    """γ_k = 1 / (2k(2k−1) ln 2) para k = 1..order."""
    k = np.arange(1, order + 1, dtype=float)
    gammas = 1.0 / (math.log(2.0) * 2.0 * k * (2.0 * k - 1.0))
    gammas.setflags(write=False)
    return gammas


def series_tail_bound(order: int) -> float:
    return 1.0 / (2.0 * order * math.log(2.0))


def entropy(x: HatMeasure) -> float:
    """H(x) = Σ masa · h₂((1 − m)/2), en bits."""
    return float(x.masses @ _entropy_weights(x.grid.bins))


def bhattacharyya(x: HatMeasure) -> float:
    return float(x.masses @ _bhattacharyya_weights(x.grid.bins))


def error_prob(x: HatMeasure) -> float:
    return float(x.masses @ ((1.0 - x.grid.nodes) / 2.0))


def moment(k: int, x: HatMeasure) -> float:
    """M_k(x) = Σ masa · m^{2k}."""
    if k < 1:
        raise ParameterRangeError(f"El orden del momento debe ser ≥ 1: {k}")
    return float(x.masses @ x.grid.nodes ** (2 * k))


def moments(x: HatMeasure, order: int = DEFAULT_ORDER) -> np.ndarray:
    """Vector (M_1(x), ..., M_order(x))."""
    return x.masses @ _moment_table(x.grid.bins, order)


def entropy_series(x: HatMeasure, order: int = DEFAULT_ORDER) -> float:
    """Serie truncada 1 − Σ_{k≤order} γ_k M_k(x)."""
    return float(1.0 - moments(x, order) @ series_weights(order))


# =============================
# DISTANCIA Y ORDEN
# =============================
@dataclass(frozen=True)
class EntropyDistance:
    value: float
    tail_bound: float
    order: int


def entropy_distance(x: HatMeasure, y: HatMeasure, order: int = DEFAULT_ORDER) -> EntropyDistance:
    """
    Distancia de entropía truncada d_H(x, y) = Σ_{k≤K} γ_k |M_k(x) − M_k(y)|.

    Parameters
    ----------
    x, y : HatMeasure
        Medidas sobre la misma grilla.
    order : int
        Orden de truncamiento K (≥ 1).

    Returns
    -------
    EntropyDistance
        Valor truncado y cota analítica de la cola (2K ln 2)⁻¹.
    """
    if order < 1:
        raise ParameterRangeError(f"El orden de truncamiento debe ser ≥ 1: {order}")
    grid = _same_grid(x, y)
    gaps = (x.masses - y.masses) @ _moment_table(grid.bins, order)
    value = float(np.abs(gaps) @ series_weights(order))
    return EntropyDistance(value=value, tail_bound=series_tail_bound(order), order=order)


def upper_partial_expectations(x: HatMeasure) -> np.ndarray:
    """E_x[(M − t)⁺] para cada nodo t de la grilla."""
    nodes = x.grid.nodes
    tail_mass = np.cumsum(x.masses[::-1])[::-1]
    tail_first = np.cumsum((x.masses * nodes)[::-1])[::-1]
    return tail_first - nodes * tail_mass


def is_degraded(x1: HatMeasure, x2: HatMeasure, slack: float = MASS_TOL) -> bool:
    """
    True si x1 ⪰ x2 (x1 es degradada respecto de x2).

    Las bisagras −(m − t)⁺ en los nodos de la grilla, junto con las
    constantes, generan el cono de funciones cóncavas no crecientes sobre
    medidas cuantizadas; basta comparar E[(M − t)⁺] nodo a nodo.
    """
    _same_grid(x1, x2)
    gap = upper_partial_expectations(x1) - upper_partial_expectations(x2)
    return bool(np.all(gap <= slack))
