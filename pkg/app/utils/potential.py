"""
Funcionales de potencial del sistema simple, derivadas direccionales,
brecha de energía, umbral de potencial, funcional de área y curvas de
potencial.
"""
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm.auto import tqdm

from utils.channels import ChannelFamily, ChannelKind
from utils.de_single import (
    DEFAULT_SCAN,
    DEFAULT_TOL_H,
    BasinVerdict,
    StopRule,
    ThresholdReport,
    basin_target,
    bisect_predicate,
    classify_terminal,
    de_fixed_point,
    de_step,
    forward_fixed_point,
    minimal_fixed_point,
)
from utils.ensembles import DegreePolynomial, EnsembleKind, EnsembleSpec, derived_constants
from utils.errors import ParameterRangeError, PreconditionError
from utils.measure_core import (
    HatMeasure,
    check_conv,
    delta_inf,
    entropy,
    error_prob,
    mixture,
    poly_check,
    poly_var,
    var_conv,
)

logger = logging.getLogger(__name__)

Direction = Tuple[HatMeasure, HatMeasure]


# =============================
# REPORTES
# =============================
@dataclass(frozen=True)
class PotentialReport:
    """
    Valor de un potencial y su desglose por términos.

    ``value`` es exactamente la suma, en orden, de ``terms``.
    """

    value: float
    terms: Mapping[str, float]
    residual: Optional[float] = None
    by_position: Mapping[str, Tuple[float, ...]] = field(default_factory=dict)

    @classmethod
    def from_terms(cls, terms: Dict[str, float], residual: Optional[float] = None,
                   by_position: Optional[Mapping[str, Tuple[float, ...]]] = None) -> "PotentialReport":
        value = 0.0
        for term in terms.values():
            value += term
        return cls(value, dict(terms), residual, dict(by_position or {}))

    def as_dict(self) -> dict:
        report = {"value": self.value, "terms": dict(self.terms), "residual": self.residual}
        if self.by_position:
            report["by_position"] = {k: list(v) for k, v in self.by_position.items()}
        return report


@dataclass(frozen=True)
class EnergyGapReport:
    gap: float
    argmin: str
    candidate_count: int
    classifications: Mapping[str, int]
    unverified: bool
    reference: float = 0.0
    upper_bound: bool = True

    @property
    def infinite(self) -> bool:
        return math.isinf(self.gap)

    def as_dict(self) -> dict:
        return {
            "gap": "inf" if self.infinite else self.gap,
            "infinite": self.infinite,
            "argmin": self.argmin,
            "candidate_count": self.candidate_count,
            "classifications": dict(self.classifications),
            "unverified": self.unverified,
            "reference": self.reference,
            "upper_bound": self.upper_bound,
        }


@dataclass(frozen=True)
class CandidateStrategy:
    """
    Conjunto de candidatos de la brecha de energía.

    Trayectoria de DE desde Δ₀, mezclas entre iterados consecutivos y sondas
    de las familias indicadas en ``probe_count`` entropías (j + 1)/probe_count.
    ``trajectory_limit`` submuestrea la trayectoria (None = todos los iterados).
    """

    include_trajectory: bool = True
    mixtures: Tuple[float, ...] = (0.25, 0.5, 0.75)
    probe_families: Tuple[ChannelKind, ...] = (ChannelKind.BSC, ChannelKind.BAWGN)
    probe_count: int = 32
    trajectory_limit: Optional[int] = None
    random_mixtures: int = 0
    seed: int = 0


# =============================
# POTENCIALES
# =============================
def potential_ldpc(e: EnsembleSpec, x: HatMeasure, c: HatMeasure,
                   with_residual: bool = False) -> PotentialReport:
    """
    U_s(x; c) = (L′(1)/R′(1))H(R^⊠(x)) + L′(1)H(ρ^⊠(x)) − L′(1)H(x ⊠ ρ^⊠(x))
                − H(c ⊛ L^⊛(ρ^⊠(x)))
    """
    k = derived_constants(e)
    rho_x = poly_check(e.rho, x)
    terms = {
        "check_R": k.L_prime_1 / k.R_prime_1 * entropy(poly_check(e.R, x)),
        "check_rho": k.L_prime_1 * entropy(rho_x),
        "edge": -k.L_prime_1 * entropy(check_conv(x, rho_x)),
        "variable": -entropy(var_conv(c, poly_var(e.L, rho_x))),
    }
    return PotentialReport.from_terms(terms, _duality_residual(x, rho_x) if with_residual else None)


def potential_ldgm(e: EnsembleSpec, x: HatMeasure, c: HatMeasure,
                   with_residual: bool = False) -> PotentialReport:
    """
    U_s(x; c) = (L′(1)/R′(1))H(c ⊠ R^⊠(x)) − L′(1)H(x ⊠ c ⊠ ρ^⊠(x))
                + L′(1)H(c ⊠ ρ^⊠(x)) − H(L^⊛(c ⊠ ρ^⊠(x))) − (L′(1)/R′(1))H(c)
    """
    k = derived_constants(e)
    ratio = k.L_prime_1 / k.R_prime_1
    c_rho = check_conv(c, poly_check(e.rho, x))
    terms = {
        "check_R": ratio * entropy(check_conv(c, poly_check(e.R, x))),
        "edge": -k.L_prime_1 * entropy(check_conv(x, c_rho)),
        "check_rho": k.L_prime_1 * entropy(c_rho),
        "variable": -entropy(poly_var(e.L, c_rho)),
        "channel": -ratio * entropy(c),
    }
    return PotentialReport.from_terms(terms, _duality_residual(x, c_rho) if with_residual else None)


def potential(e: EnsembleSpec, x: HatMeasure, c: HatMeasure, with_residual: bool = False) -> PotentialReport:
    if e.kind is EnsembleKind.LDPC:
        return potential_ldpc(e, x, c, with_residual)
    return potential_ldgm(e, x, c, with_residual)


def _duality_residual(x: HatMeasure, y: HatMeasure) -> float:
    # |H(x ⊛ y) + H(x ⊠ y) − H(x) − H(y)|: estimación del error de grilla
    return abs(entropy(var_conv(x, y)) + entropy(check_conv(x, y)) - entropy(x) - entropy(y))


# =============================
# DERIVADAS DIRECCIONALES
# =============================
def derivative_kernel(e: EnsembleSpec, x: HatMeasure, c: HatMeasure) -> Tuple[float, Optional[HatMeasure]]:
    # ρ′^⊠(x) = ρ′(1)·(mezcla normalizada); en LDGM se agrega el factor c ⊠
    k = derived_constants(e)
    if k.rho_prime_1 == 0.0:
        return 0.0, None
    kernel = poly_check(e.rho_prime, x)
    if e.kind is EnsembleKind.LDGM:
        kernel = check_conv(c, kernel)
    return k.L_prime_1 * k.rho_prime_1, kernel


def bilinear_entropy(a: Direction, b: Direction) -> float:
    """H((a⁺ − a⁻) ⊠ (b⁺ − b⁻)) por expansión multilineal."""
    (ap, am), (bp, bm) = a, b
    return (entropy(check_conv(ap, bp)) - entropy(check_conv(ap, bm))
            - entropy(check_conv(am, bp)) + entropy(check_conv(am, bm)))


def directional_derivative(
    e: EnsembleSpec,
    x: HatMeasure,
    c: HatMeasure,
    direction: Direction,
    step: Optional[HatMeasure] = None,
) -> float:
    """
    d_x U_s(x; c)[y⁺ − y⁻] = L′(1)·H([T_s(x; c) − x] ⊠ ρ′^⊠(x) ⊠ [y⁺ − y⁻]).

    ``step`` permite reutilizar T_s(x; c) ya calculado.
    """
    scale, kernel = derivative_kernel(e, x, c)
    if kernel is None:
        return 0.0
    tx = de_step(e, x, c) if step is None else step
    y_plus, y_minus = direction
    weighted = (check_conv(kernel, y_plus), check_conv(kernel, y_minus))
    return scale * bilinear_entropy((tx, x), weighted)


def stationarity_residual(e: EnsembleSpec, x: HatMeasure, c: HatMeasure,
                          directions: Sequence[Direction]) -> float:
    """Máximo |d_x U_s(x; c)[y]| sobre las direcciones dadas."""
    tx = de_step(e, x, c)
    return max((abs(directional_derivative(e, x, c, d, tx)) for d in directions), default=0.0)


# =============================
# BRECHA DE ENERGÍA
# =============================
def _classify_ordered(measures: Sequence[HatMeasure], classify) -> List[BasinVerdict]:
    # Las sondas de una familia crecen en degradación y la cuenca es un
    # conjunto hacia abajo: basta buscar la frontera por bisección.
    verdicts: List[Optional[BasinVerdict]] = [None] * len(measures)
    lo, hi = 0, len(measures)
    while lo < hi:
        mid = (lo + hi) // 2
        verdicts[mid] = classify(measures[mid])
        if verdicts[mid] is BasinVerdict.UNKNOWN:
            break
        if verdicts[mid] is BasinVerdict.YES:
            lo = mid + 1
        else:
            hi = mid
    else:
        return [BasinVerdict.YES if i < lo else (v or BasinVerdict.NO) for i, v in enumerate(verdicts)]
    return [v if v is not None else classify(m) for v, m in zip(verdicts, measures)]


def _trajectory_indices(length: int, limit: Optional[int]) -> np.ndarray:
    if limit is None or limit >= length:
        return np.arange(length)
    return np.unique(np.linspace(0, length - 1, max(limit, 2)).round().astype(int))


def energy_gap(
    e: EnsembleSpec,
    c: HatMeasure,
    strategy: CandidateStrategy = CandidateStrategy(),
    stop: StopRule = StopRule(),
    f0: Optional[HatMeasure] = None,
) -> EnergyGapReport:
    """
    Cota superior de la brecha de energía ΔE(c).

    Mínimo de U_s sobre los candidatos fuera de la cuenca de atracción (de Δ∞
    en LDPC, de f₀ en LDGM, restando U_s(f₀) en ese caso). Sin candidatos
    fuera de la cuenca la brecha es +∞.

    Los iterados de DE desde Δ₀ y sus mezclas consecutivas heredan la
    clasificación del límite de la trayectoria: quedan entre dos iterados
    comparables y DE es monótona.
    """
    grid = c.grid
    if e.kind is EnsembleKind.LDGM:
        target = f0 if f0 is not None else minimal_fixed_point(e, c, stop)
    else:
        target = delta_inf(grid)

    def classify(x: HatMeasure) -> BasinVerdict:
        return classify_terminal(de_fixed_point(e, x, c, stop), target, stop.order)

    candidates: List[Tuple[str, HatMeasure, BasinVerdict]] = []
    if strategy.include_trajectory:
        trace = forward_fixed_point(e, c, stop, keep_measures=True)
        verdict = classify_terminal(trace, target, stop.order)
        indices = _trajectory_indices(len(trace.measures), strategy.trajectory_limit)
        for i in indices:
            candidates.append((f"trayectoria[{i}]", trace.measures[i], verdict))
            if i + 1 < len(trace.measures):
                for t in strategy.mixtures:
                    mixed = mixture([1.0 - t, t], [trace.measures[i], trace.measures[i + 1]])
                    candidates.append((f"mezcla[{i},{t:g}]", mixed, verdict))

    probe_sets: List[Tuple[str, List[float], List[HatMeasure]]] = []
    levels = [(j + 1) / strategy.probe_count for j in range(strategy.probe_count)]
    for kind in strategy.probe_families:
        family = ChannelFamily(kind, grid)
        probes = [family.density(h) for h in levels]
        probe_sets.append((kind.value, levels, probes))
        verdicts = _classify_ordered(probes, classify)
        candidates.extend(
            (f"sonda[{kind.value},{h:.4f}]", m, v) for h, m, v in zip(levels, probes, verdicts)
        )

    if strategy.random_mixtures and probe_sets:
        rng = np.random.default_rng(strategy.seed)
        pool = [(f"{name},{h:.4f}", m) for name, hs, ms in probe_sets for h, m in zip(hs, ms)]
        for _ in range(strategy.random_mixtures):
            i, j = rng.integers(len(pool), size=2)
            t = float(rng.uniform())
            mixed = mixture([1.0 - t, t], [pool[i][1], pool[j][1]])
            candidates.append((f"azar[{pool[i][0]}|{pool[j][0]},{t:.3f}]", mixed, classify(mixed)))

    reference = potential(e, target, c).value if e.kind is EnsembleKind.LDGM else 0.0
    counts = {v.value: 0 for v in BasinVerdict}
    best, argmin = math.inf, ""
    for label, x, verdict in candidates:
        counts[verdict.value] += 1
        if verdict is not BasinVerdict.NO:
            continue
        value = potential(e, x, c).value
        if value < best:
            best, argmin = value, label

    gap = best - reference if math.isfinite(best) else math.inf
    unverified = counts[BasinVerdict.UNKNOWN.value] > 0
    if unverified:
        logger.warning("Brecha de energía no verificada: %d candidatos sin clasificar",
                       counts[BasinVerdict.UNKNOWN.value])
    logger.debug("ΔE = %s (argmin %s, %d candidatos)", gap, argmin or "-", len(candidates))
    return EnergyGapReport(
        gap=gap,
        argmin=argmin,
        candidate_count=len(candidates),
        classifications=counts,
        unverified=unverified,
        reference=reference,
    )


# =============================
# UMBRAL DE POTENCIAL
# =============================
ESTIMATORS = ("forward-fp-sign", "energy-gap-sign")


def _forward_sign_predicate(e: EnsembleSpec, family: ChannelFamily, stop: StopRule):
    def predicate(h: float) -> Optional[bool]:
        c = family.density(h)
        trace = forward_fixed_point(e, c, stop)
        verdict = classify_terminal(trace, basin_target(e, c, stop), stop.order)
        if verdict is BasinVerdict.UNKNOWN:
            return None
        if verdict is BasinVerdict.YES:
            return True
        return potential(e, trace.terminal, c).value > 0.0
    return predicate


def _gap_sign_predicate(e: EnsembleSpec, family: ChannelFamily, stop: StopRule,
                        strategy: CandidateStrategy, flags: List[str]):
    def predicate(h: float) -> Optional[bool]:
        report = energy_gap(e, family.density(h), strategy, stop)
        if report.unverified and "unverified-gap" not in flags:
            flags.append("unverified-gap")
        return report.gap > 0.0
    return predicate


def _estimate(e, family, estimator, tol_h, stop, strategy, scan, lo=0.0, hi=1.0,
              first_transition=False) -> ThresholdReport:
    extra: List[str] = []
    if estimator == "forward-fp-sign":
        predicate = _forward_sign_predicate(e, family, stop)
    elif estimator == "energy-gap-sign":
        predicate = _gap_sign_predicate(e, family, stop, strategy, extra)
    else:
        raise ParameterRangeError(f"Estimador desconocido: {estimator}")
    bracket = bisect_predicate(predicate, lo, hi, tol_h, scan, first_transition)
    kind = "potential" if e.kind is EnsembleKind.LDPC else "gap-sign"
    return ThresholdReport(
        kind=kind,
        estimator=estimator,
        h_lo=bracket.lo,
        h_hi=bracket.hi,
        tol=tol_h,
        iterations=len(bracket.evaluations),
        flags=tuple(bracket.flags + extra),
        evaluations=tuple(bracket.evaluations),
    )


def potential_threshold(
    e: EnsembleSpec,
    family: ChannelFamily,
    estimator: str = "forward-fp-sign",
    tol_h: float = DEFAULT_TOL_H,
    stop: StopRule = StopRule(),
    cross_check: bool = True,
    strategy: CandidateStrategy = CandidateStrategy(),
    scan: int = DEFAULT_SCAN,
) -> ThresholdReport:
    """
    Umbral de potencial h*: donde la brecha de energía cambia de signo.

    ``forward-fp-sign`` biseca el signo de U_s en el punto fijo de DE desde Δ₀
    (positivo por convención si ese punto fijo es Δ∞); ``energy-gap-sign``
    biseca el signo de ``energy_gap``. Con ``cross_check`` se calcula el otro
    estimador y se marca "estimator-discrepancy" si los puntos medios
    difieren en más de 2·tol_h.
    """
    if e.kind is not EnsembleKind.LDPC:
        raise PreconditionError("El umbral de potencial sólo está definido para ensambles LDPC")
    primary = _estimate(e, family, estimator, tol_h, stop, strategy, scan)
    if not cross_check:
        return primary

    other = ESTIMATORS[1] if estimator == ESTIMATORS[0] else ESTIMATORS[0]
    alternate = _estimate(e, family, other, tol_h, stop, strategy, scan)
    flags = list(primary.flags)
    if abs(primary.h_mid - alternate.h_mid) > 2.0 * tol_h:
        flags.append("estimator-discrepancy")
        logger.warning("Los estimadores difieren: %.6f vs %.6f", primary.h_mid, alternate.h_mid)
    return ThresholdReport(
        kind=primary.kind,
        estimator=primary.estimator,
        h_lo=primary.h_lo,
        h_hi=primary.h_hi,
        tol=tol_h,
        iterations=primary.iterations,
        flags=tuple(flags),
        evaluations=primary.evaluations,
        alternate=alternate,
    )


def gap_sign_threshold(
    e: EnsembleSpec,
    family: ChannelFamily,
    lo: float = 0.0,
    hi: float = 1.0,
    tol_h: float = DEFAULT_TOL_H,
    stop: StopRule = StopRule(),
    strategy: CandidateStrategy = CandidateStrategy(),
    scan: int = DEFAULT_SCAN,
) -> ThresholdReport:
    """
    Primer cambio de signo de la brecha de energía en [lo, hi].

    Para LDGM la monotonía de ΔE en h no está garantizada; la reentrada se
    marca como "reentrant".
    """
    return _estimate(e, family, "energy-gap-sign", tol_h, stop, strategy, scan, lo, hi,
                     first_transition=e.kind is EnsembleKind.LDGM)


# =============================
# ÁREA Y CURVAS
# =============================
def area_functional(dv: int, dc: int, x: HatMeasure) -> float:
    """
    A(x, d_v, d_c) = H(x) + (d_v − 1 − d_v/d_c)H(x^{⊠d_c}) − (d_v − 1)H(x^{⊠(d_c−1)})

    En el punto fijo de DE desde Δ₀ coincide con −U_s.
    """
    if dv < 1 or dc < 2:
        raise ParameterRangeError(f"Grados inválidos: d_v={dv}, d_c={dc}")
    partial = poly_check(DegreePolynomial.monomial(dc - 1), x)
    full = check_conv(partial, x)
    return entropy(x) + (dv - 1 - dv / dc) * entropy(full) - (dv - 1) * entropy(partial)


def potential_curve(
    e: EnsembleSpec,
    family: ChannelFamily,
    h: Optional[float] = None,
    probe_kind: ChannelKind = ChannelKind.BAWGN,
    probe_grid: Optional[Sequence[float]] = None,
    c: Optional[HatMeasure] = None,
) -> pd.DataFrame:
    """
    Corte U_s(probe(h̃); c) sobre ``probe_grid``.

    El canal es ``c`` si se entrega (por ejemplo desde su parámetro nativo);
    si no, c(h) de ``family``.

    Returns
    -------
    pd.DataFrame
        Columnas ``h_tilde`` y ``U_s``.
    """
    if probe_grid is None:
        probe_grid = np.linspace(0.0, 1.0, 101)
    if c is None:
        if h is None:
            raise ParameterRangeError("potential_curve necesita h o la medida del canal")
        c = family.density(h)
    probes = ChannelFamily(probe_kind, family.grid)
    rows = []
    for h_tilde in tqdm(probe_grid, desc="curva de potencial", disable=None, leave=False):
        rows.append((float(h_tilde), potential(e, probes.density(float(h_tilde)), c).value))
    return pd.DataFrame(rows, columns=["h_tilde", "U_s"])


def ldgm_error_floor(e: EnsembleSpec, c: HatMeasure, f0: Optional[HatMeasure] = None,
                     stop: StopRule = StopRule()) -> float:
    """Probabilidad de error de bit E(L^⊛(c ⊠ ρ^⊠(f₀))) de un ensamble LDGM."""
    if e.kind is not EnsembleKind.LDGM:
        raise PreconditionError("El piso de error sólo aplica a ensambles LDGM")
    f0 = f0 if f0 is not None else minimal_fixed_point(e, c, stop)
    return error_prob(poly_var(e.L, check_conv(c, poly_check(e.rho, f0))))
