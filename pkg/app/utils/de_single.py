"""
Evolución de densidades del sistema simple (LDPC y LDGM): paso, punto fijo,
punto fijo mínimo, cuenca de atracción y umbrales BP / estabilidad.
"""
import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from utils.channels import ChannelFamily
from utils.ensembles import EnsembleKind, EnsembleSpec, derived_constants
from utils.errors import ConvergenceError, ParameterRangeError, PreconditionError
from utils.measure_core import (
    DEFAULT_ORDER,
    HatMeasure,
    bhattacharyya,
    check_conv,
    delta0,
    delta_inf,
    entropy,
    entropy_distance,
    error_prob,
    is_degraded,
    poly_check,
    poly_var,
    var_conv,
)

logger = logging.getLogger(__name__)

DEFAULT_TOL_DH = 1e-9
DEFAULT_MAX_ITER = 2000
DEFAULT_TOL_H = 1e-4
DEFAULT_SCAN = 8

# Umbral de entropía para declarar convergencia a Δ∞
PERFECT_ENTROPY = 1e-6
BASIN_DISTANCE = 1e-6
MONOTONE_SLACK = 1e-9

# Marcas que describen el ensamble y no un fallo numérico
INFORMATIVE_FLAGS = frozenset({"reentrant"})


@dataclass(frozen=True)
class StopRule:
    tol_dh: float = DEFAULT_TOL_DH
    max_iter: int = DEFAULT_MAX_ITER
    order: int = DEFAULT_ORDER

    def __post_init__(self):
        if not self.tol_dh > 0.0:
            raise ParameterRangeError(f"La tolerancia en d_H debe ser positiva: {self.tol_dh}")
        if self.max_iter < 1 or self.order < 1:
            raise ParameterRangeError("max_iter y order deben ser ≥ 1")


class DeStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITER = "maxIterReached"


class BasinVerdict(str, Enum):
    YES = "yes"
    NO = "no"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class DeIterate:
    iteration: int
    entropy: float
    bhattacharyya: float
    error_prob: float
    step: float


@dataclass(frozen=True)
class DeTrace:
    iterates: Tuple[DeIterate, ...]
    terminal: HatMeasure
    status: DeStatus
    measures: Tuple[HatMeasure, ...] = ()

    @property
    def converged(self) -> bool:
        return self.status is DeStatus.CONVERGED

    @property
    def iterations(self) -> int:
        return self.iterates[-1].iteration


# =============================
# PASO Y PUNTO FIJO
# =============================
def de_step(e: EnsembleSpec, x: HatMeasure, c: HatMeasure) -> HatMeasure:
    """
    Una aplicación de T_s.

    LDPC: c ⊛ λ^⊛(ρ^⊠(x)).  LDGM: λ^⊛(c ⊠ ρ^⊠(x)).
    """
    if e.kind is EnsembleKind.LDPC:
        return var_conv(c, poly_var(e.lam, poly_check(e.rho, x)))
    return poly_var(e.lam, check_conv(c, poly_check(e.rho, x)))


def _record(iteration: int, x: HatMeasure, step: float) -> DeIterate:
    return DeIterate(iteration, entropy(x), bhattacharyya(x), error_prob(x), step)


def de_fixed_point(
    e: EnsembleSpec,
    x0: HatMeasure,
    c: HatMeasure,
    stop: StopRule = StopRule(),
    keep_measures: bool = False,
) -> DeTrace:
    """
    Itera T_s desde ``x0`` hasta que d_H entre iterados sucesivos baje de
    ``stop.tol_dh`` o se agote ``stop.max_iter``.

    Parameters
    ----------
    e : EnsembleSpec
    x0, c : HatMeasure
        Medida inicial y canal.
    stop : StopRule
    keep_measures : bool
        Si es True, el trace conserva cada iterado (incluido ``x0``).

    Returns
    -------
    DeTrace
    """
    x = x0
    nxt = de_step(e, x, c)
    if not (is_degraded(x, nxt, MONOTONE_SLACK) or is_degraded(nxt, x, MONOTONE_SLACK)):
        logger.warning("T_s(x0) no es comparable con x0: la trayectoria puede no ser monótona")

    iterates: List[DeIterate] = [_record(0, x, math.nan)]
    measures: List[HatMeasure] = [x] if keep_measures else []
    status = DeStatus.MAX_ITER
    for iteration in range(1, stop.max_iter + 1):
        step = entropy_distance(nxt, x, stop.order).value
        x = nxt
        iterates.append(_record(iteration, x, step))
        if keep_measures:
            measures.append(x)
        if step < stop.tol_dh:
            status = DeStatus.CONVERGED
            break
        nxt = de_step(e, x, c)

    if status is DeStatus.MAX_ITER:
        logger.debug("DE sin converger tras %d iteraciones (último paso %.3e)",
                     stop.max_iter, iterates[-1].step)
    return DeTrace(tuple(iterates), x, status, tuple(measures))


def minimal_fixed_point(e: EnsembleSpec, c: HatMeasure, stop: StopRule = StopRule()) -> HatMeasure:
    """f₀(c): límite de DE LDGM iniciada en Δ∞."""
    if e.kind is not EnsembleKind.LDGM:
        raise PreconditionError("El punto fijo mínimo sólo está definido para LDGM")
    trace = de_fixed_point(e, delta_inf(c.grid), c, stop)
    if not trace.converged:
        raise ConvergenceError(
            f"f₀ no convergió en {stop.max_iter} iteraciones (paso {trace.iterates[-1].step:.3e})"
        )
    return trace.terminal


def basin_target(e: EnsembleSpec, c: HatMeasure, stop: StopRule = StopRule()) -> HatMeasure:
    """Δ∞ para LDPC, f₀(c) para LDGM."""
    if e.kind is EnsembleKind.LDPC:
        return delta_inf(c.grid)
    return minimal_fixed_point(e, c, stop)


def classify_terminal(trace: DeTrace, target: HatMeasure, order: int = DEFAULT_ORDER) -> BasinVerdict:
    if not trace.converged:
        return BasinVerdict.UNKNOWN
    if entropy_distance(trace.terminal, target, order).value < BASIN_DISTANCE:
        return BasinVerdict.YES
    return BasinVerdict.NO


def in_basin(
    e: EnsembleSpec,
    x: HatMeasure,
    c: HatMeasure,
    target: Optional[HatMeasure] = None,
    stop: StopRule = StopRule(),
) -> BasinVerdict:
    """Clasifica ``x`` según el límite de DE respecto de ``target``."""
    if target is None:
        target = basin_target(e, c, stop)
    return classify_terminal(de_fixed_point(e, x, c, stop), target, stop.order)


# =============================
# UMBRALES
# =============================
@dataclass(frozen=True)
class ThresholdReport:
    kind: str
    estimator: str
    h_lo: float
    h_hi: float
    tol: float
    iterations: int
    flags: Tuple[str, ...] = ()
    evaluations: Tuple[Tuple[float, Optional[bool]], ...] = ()
    alternate: Optional["ThresholdReport"] = None

    @property
    def h_mid(self) -> float:
        return (self.h_lo + self.h_hi) / 2.0

    @property
    def flagged(self) -> bool:
        own = any(flag not in INFORMATIVE_FLAGS for flag in self.flags)
        return own or (self.alternate is not None and self.alternate.flagged)

    def as_dict(self) -> dict:
        report = {
            "kind": self.kind,
            "estimator": self.estimator,
            "h_lo": self.h_lo,
            "h_hi": self.h_hi,
            "h_mid": self.h_mid,
            "tol": self.tol,
            "iterations": self.iterations,
            "flags": list(self.flags),
        }
        if self.alternate is not None:
            report["alternate"] = self.alternate.as_dict()
        return report


Predicate = Callable[[float], Optional[bool]]


@dataclass
class _Bracket:
    lo: float
    hi: float
    flags: List[str] = field(default_factory=list)
    evaluations: List[Tuple[float, Optional[bool]]] = field(default_factory=list)


def bisect_predicate(
    predicate: Predicate,
    lo: float = 0.0,
    hi: float = 1.0,
    tol: float = DEFAULT_TOL_H,
    scan: int = DEFAULT_SCAN,
    first_transition: bool = False,
) -> _Bracket:
    """
    Localiza el paso de ``True`` (h bajo) a ``False`` (h alto) de un predicado.

    Primero recorre ``scan + 1`` puntos equiespaciados y luego biseca dentro de
    la primera transición. Un veredicto desconocido (``None``) cuenta como
    ``False`` y se marca. Un ``True`` posterior a un ``False`` se marca como
    "non-monotone", o como "reentrant" con ``first_transition``.
    """
    if not tol > 0.0:
        raise ParameterRangeError(f"La tolerancia en h debe ser positiva: {tol}")
    bracket = _Bracket(lo, hi)

    def evaluate(h: float) -> bool:
        verdict = predicate(h)
        bracket.evaluations.append((h, verdict))
        logger.debug("predicado(h=%.6f) = %s", h, verdict)
        if verdict is None and "unknown-verdict" not in bracket.flags:
            bracket.flags.append("unknown-verdict")
        return bool(verdict)

    grid = np.linspace(lo, hi, max(scan, 1) + 1)
    verdicts = [evaluate(float(h)) for h in grid]
    if not verdicts[0]:
        bracket.flags.append("no-transition")
        bracket.lo = bracket.hi = lo
        return bracket
    first_false = next((i for i, v in enumerate(verdicts) if not v), None)
    if first_false is None:
        bracket.flags.append("no-transition")
        bracket.lo = bracket.hi = hi
        return bracket
    if any(verdicts[first_false:]):
        bracket.flags.append("reentrant" if first_transition else "non-monotone")

    a, b = float(grid[first_false - 1]), float(grid[first_false])
    while b - a > tol:
        mid = (a + b) / 2.0
        if evaluate(mid):
            a = mid
        else:
            b = mid
    bracket.lo, bracket.hi = a, b
    return bracket


def _report(kind: str, estimator: str, bracket: _Bracket, tol: float) -> ThresholdReport:
    return ThresholdReport(
        kind=kind,
        estimator=estimator,
        h_lo=bracket.lo,
        h_hi=bracket.hi,
        tol=tol,
        iterations=len(bracket.evaluations),
        flags=tuple(bracket.flags),
        evaluations=tuple(bracket.evaluations),
    )


def _verdict_to_bool(verdict: BasinVerdict) -> Optional[bool]:
    return {BasinVerdict.YES: True, BasinVerdict.NO: False}.get(verdict)


def bp_threshold(
    e: EnsembleSpec,
    family: ChannelFamily,
    tol_h: float = DEFAULT_TOL_H,
    stop: StopRule = StopRule(),
    scan: int = DEFAULT_SCAN,
) -> ThresholdReport:
    """
    Umbral BP: sup{h : DE desde Δ₀ converge a Δ∞}.

    Sólo para LDPC; para LDGM ver ``emergence_threshold``.
    """
    if e.kind is not EnsembleKind.LDPC:
        raise PreconditionError("El umbral BP sólo está definido para ensambles LDPC")
    start, target = delta0(family.grid), delta_inf(family.grid)

    def predicate(h: float) -> Optional[bool]:
        return _verdict_to_bool(in_basin(e, start, family.density(h), target, stop))

    bracket = bisect_predicate(predicate, tol=tol_h, scan=scan)
    report = _report("bp", "bisection", bracket, tol_h)
    logger.info("Umbral BP (%s): [%.6f, %.6f]", family.kind.value, report.h_lo, report.h_hi)
    return report


def emergence_threshold(
    e: EnsembleSpec,
    family: ChannelFamily,
    tol_h: float = DEFAULT_TOL_H,
    stop: StopRule = StopRule(),
    scan: int = DEFAULT_SCAN,
) -> ThresholdReport:
    """
    LDGM: primer h en que DE desde Δ₀ deja de converger a f₀(c(h)), es decir,
    en que aparece un segundo punto fijo. Para h grande ambos vuelven a
    coincidir; esa reentrada queda marcada como "reentrant".
    """
    if e.kind is not EnsembleKind.LDGM:
        raise PreconditionError("El umbral de emergencia sólo aplica a ensambles LDGM")
    start = delta0(family.grid)

    def predicate(h: float) -> Optional[bool]:
        c = family.density(h)
        return _verdict_to_bool(in_basin(e, start, c, minimal_fixed_point(e, c, stop), stop))

    bracket = bisect_predicate(predicate, tol=tol_h, scan=scan, first_transition=True)
    return _report("emergence", "bisection", bracket, tol_h)


def stability_threshold(
    e: EnsembleSpec,
    family: ChannelFamily,
    tol_h: float = DEFAULT_TOL_H,
) -> ThresholdReport:
    """sup{h : 𝔅(c(h))·λ′(0)·ρ′(1) < 1}."""
    if e.kind is not EnsembleKind.LDPC:
        raise PreconditionError("El umbral de estabilidad sólo está definido para ensambles LDPC")
    constants = derived_constants(e)
    scale = constants.lambda_prime_0 * constants.rho_prime_1
    if scale == 0.0:
        return ThresholdReport("stability", "closed-form", 1.0, 1.0, tol_h, 0)

    def predicate(h: float) -> bool:
        return bhattacharyya(family.density(h)) * scale < 1.0

    bracket = bisect_predicate(predicate, tol=tol_h, scan=1)
    if bracket.flags == ["no-transition"] and bracket.lo == 1.0:
        bracket.flags.clear()
    return _report("stability", "bisection", bracket, tol_h)


def forward_fixed_point(
    e: EnsembleSpec,
    c: HatMeasure,
    stop: StopRule = StopRule(),
    keep_measures: bool = False,
) -> DeTrace:
    """T_s^{(∞)}(Δ₀; c)."""
    return de_fixed_point(e, delta0(c.grid), c, stop, keep_measures)


def monotone_violations(trace: DeTrace, increasing: bool = False,
                        slack: float = MONOTONE_SLACK) -> Sequence[int]:
    """Iteraciones en que H rompe la monotonía esperada."""
    values = np.array([it.entropy for it in trace.iterates])
    diffs = np.diff(values)
    bad = diffs < -slack if increasing else diffs > slack
    return [int(i) + 1 for i in np.flatnonzero(bad)]
