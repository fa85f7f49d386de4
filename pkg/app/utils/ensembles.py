"""
Distribuciones de grados, conversión entre perspectiva de aristas y de nodos,
y constantes escalares usadas por umbrales y cotas.
"""
import logging
from dataclasses import asdict, dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Any, Mapping, Sequence, Union

import numpy as np
from numpy.polynomial import polynomial as P

from utils.errors import EnsembleError

logger = logging.getLogger(__name__)

ROUNDTRIP_TOL = 1e-12
NORMALIZATION_TOL = 1e-9

Coefficient = Union[float, int, Mapping[str, int]]


class EnsembleKind(str, Enum):
    LDPC = "ldpc"
    LDGM = "ldgm"


def parse_coefficient(value: Coefficient) -> float:
    """Acepta números o pares racionales {"num": a, "den": b}."""
    if isinstance(value, Mapping):
        try:
            return float(Fraction(int(value["num"]), int(value["den"])))
        except (KeyError, ZeroDivisionError, TypeError, ValueError) as exc:
            raise EnsembleError(f"Coeficiente racional inválido: {value!r}") from exc
    if isinstance(value, bool):
        raise EnsembleError(f"Coeficiente inválido: {value!r}")
    return float(value)


# =============================
# POLINOMIOS DE GRADO
# =============================
@dataclass(frozen=True)
class DegreePolynomial:
    """
    Polinomio Σ coeffs[n]·tⁿ con coeficientes no negativos.

    El índice es la potencia de t: en perspectiva de aristas λ(t) = Σ λᵢ t^{i−1},
    de modo que coeffs[1] de λ corresponde a nodos variables de grado 2.
    """

    coeffs: tuple = field(default=(1.0,))

    def __post_init__(self):
        coeffs = np.trim_zeros(np.asarray([parse_coefficient(c) for c in self.coeffs], dtype=float), "b")
        if coeffs.size == 0:
            raise EnsembleError("El polinomio no puede ser nulo")
        if np.any(coeffs < 0.0) or not np.all(np.isfinite(coeffs)):
            raise EnsembleError(f"Coeficientes inválidos: {list(self.coeffs)}")
        object.__setattr__(self, "coeffs", tuple(float(c) for c in coeffs))

    @classmethod
    def from_sequence(cls, values: Sequence[Coefficient]) -> "DegreePolynomial":
        return cls(tuple(values))

    @classmethod
    def monomial(cls, power: int) -> "DegreePolynomial":
        return cls(tuple([0.0] * power + [1.0]))

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.coeffs)

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def __call__(self, t):
        return P.polyval(t, self.array)

    def derivative(self, order: int = 1) -> np.ndarray:
        """Coeficientes de la derivada (no normalizada)."""
        return P.polyder(self.array, order) if self.degree >= order else np.zeros(1)

    def derivative_at(self, t: float, order: int = 1) -> float:
        return float(P.polyval(t, self.derivative(order)))

    def normalized(self) -> "DegreePolynomial":
        total = self.array.sum()
        if total <= 0.0:
            raise EnsembleError("El polinomio no es normalizable")
        return DegreePolynomial(tuple(self.array / total))

    def is_distribution(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(sum(self.coeffs) - 1.0) <= tol


def _edge_to_node(edge: DegreePolynomial) -> DegreePolynomial:
    # L(t) = ∫₀ᵗ λ / ∫₀¹ λ
    integral = P.polyint(edge.array)
    total = integral.sum()
    if total <= 0.0:
        raise EnsembleError("Distribución de aristas no normalizable")
    return DegreePolynomial(tuple(integral / total))


def _node_to_edge(node: DegreePolynomial) -> DegreePolynomial:
    # λ(t) = L′(t) / L′(1)
    derivative = node.derivative()
    total = derivative.sum()
    if total <= 0.0:
        raise EnsembleError("Distribución de nodos no normalizable")
    return DegreePolynomial(tuple(derivative / total))


# =============================
# ENSAMBLE
# =============================
@dataclass(frozen=True)
class EnsembleConstants:
    lambda_prime_0: float
    lambda_prime_1: float
    rho_prime_1: float
    rho_second_1: float
    L_prime_1: float
    R_prime_1: float
    design_rate: float
    K: float

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EnsembleSpec:
    """
    Ensamble LDPC(λ, ρ) o LDGM(λ, ρ) con ambas perspectivas pobladas.

    Se construye con ``from_edge_perspective`` o ``from_node_perspective``.
    """

    kind: EnsembleKind
    lam: DegreePolynomial
    rho: DegreePolynomial
    L: DegreePolynomial
    R: DegreePolynomial

    def __post_init__(self):
        object.__setattr__(self, "kind", EnsembleKind(self.kind))
        for name in ("lam", "rho", "L", "R"):
            if not getattr(self, name).is_distribution():
                raise EnsembleError(f"{name} no suma 1: {getattr(self, name).coeffs}")
        if self.kind is EnsembleKind.LDPC and self.lam.coeffs[0] > 0.0:
            raise EnsembleError(
                "Los ensambles LDPC no admiten nodos variables de grado uno "
                f"(λ₁ = {self.lam.coeffs[0]})"
            )
        for edge, node, name in ((self.lam, self.L, "λ"), (self.rho, self.R, "ρ")):
            expected = _node_to_edge(node).array
            if expected.shape != edge.array.shape or np.max(np.abs(expected - edge.array)) > ROUNDTRIP_TOL:
                raise EnsembleError(f"{name} no es consistente con su perspectiva de nodos")

    @classmethod
    def from_edge_perspective(cls, lam, rho, kind=EnsembleKind.LDPC) -> "EnsembleSpec":
        lam, rho = _as_polynomial(lam), _as_polynomial(rho)
        for name, poly in (("λ", lam), ("ρ", rho)):
            if not poly.is_distribution():
                raise EnsembleError(f"{name} no suma 1: {poly.coeffs}")
        lam, rho = lam.normalized(), rho.normalized()
        return cls(kind, lam, rho, _edge_to_node(lam), _edge_to_node(rho))

    @classmethod
    def from_node_perspective(cls, L, R, kind=EnsembleKind.LDPC) -> "EnsembleSpec":
        L, R = _as_polynomial(L), _as_polynomial(R)
        if L.coeffs[0] > 0.0 or R.coeffs[0] > 0.0:
            raise EnsembleError("Las distribuciones de nodos no admiten grado cero")
        return cls(kind, _node_to_edge(L), _node_to_edge(R), L, R)

    @property
    def rho_prime(self) -> DegreePolynomial:
        """ρ′ normalizado a distribución; ver ``derived_constants`` para ρ′(1)."""
        return DegreePolynomial(tuple(self.rho.derivative())).normalized()

    @property
    def is_regular(self) -> bool:
        return len(np.flatnonzero(self.lam.array)) == 1 and len(np.flatnonzero(self.rho.array)) == 1

    @property
    def regular_degrees(self) -> tuple:
        """(d_v, d_c) de un ensamble regular."""
        if not self.is_regular:
            raise EnsembleError("El ensamble no es regular")
        return self.lam.degree + 1, self.rho.degree + 1

    def to_config(self) -> dict:
        return {"kind": self.kind.value, "lambda": list(self.lam.coeffs), "rho": list(self.rho.coeffs)}


def _as_polynomial(value) -> DegreePolynomial:
    if isinstance(value, DegreePolynomial):
        return value
    return DegreePolynomial.from_sequence(value)


def derived_constants(e: EnsembleSpec) -> EnsembleConstants:
    """
    Constantes escalares del ensamble.

    K = L′(1)(2ρ″(1) + ρ′(1) + 2λ′(1)ρ′(1)²) no depende de N ni de w.
    La tasa de diseño es 1 − L′(1)/R′(1) para LDPC y R′(1)/L′(1) para LDGM.
    """
    lp0 = e.lam.derivative_at(0.0)
    lp1 = e.lam.derivative_at(1.0)
    rp1 = e.rho.derivative_at(1.0)
    rpp1 = e.rho.derivative_at(1.0, order=2)
    Lp1 = e.L.derivative_at(1.0)
    Rp1 = e.R.derivative_at(1.0)
    if e.kind is EnsembleKind.LDPC:
        rate = 1.0 - Lp1 / Rp1
    else:
        rate = Rp1 / Lp1
    K = Lp1 * (2.0 * rpp1 + rp1 + 2.0 * lp1 * rp1 ** 2)
    return EnsembleConstants(
        lambda_prime_0=lp0,
        lambda_prime_1=lp1,
        rho_prime_1=rp1,
        rho_second_1=rpp1,
        L_prime_1=Lp1,
        R_prime_1=Rp1,
        design_rate=rate,
        K=K,
    )


def ensemble_from_config(document: Mapping[str, Any]) -> EnsembleSpec:
    """Construye el ensamble desde un documento ya validado por esquema."""
    kind = EnsembleKind(document.get("kind", "ldpc"))
    if "lambda" in document:
        return EnsembleSpec.from_edge_perspective(document["lambda"], document["rho"], kind)
    return EnsembleSpec.from_node_perspective(document["L"], document["R"], kind)
