"""
Cadenas acopladas espacialmente (LDPC y LDGM): paso acoplado, sistema
modificado, potencial acoplado, operador de desplazamiento, su cota y barridos
de saturación de umbral.

Las posiciones de los perfiles se indexan 1..N_w en los docstrings y 0..N_w−1
en el código.
"""
import itertools
import logging
import math
from dataclasses import asdict, dataclass, replace
from enum import Enum
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed
from tqdm.auto import tqdm

from utils.channels import ChannelFamily
from utils.de_single import DeStatus, StopRule, minimal_fixed_point
from utils.ensembles import EnsembleKind, EnsembleSpec, derived_constants
from utils.errors import GridMismatchError, ParameterRangeError, PreconditionError
from utils.measure_core import (
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
from utils.potential import (
    CandidateStrategy,
    PotentialReport,
    bilinear_entropy,
    derivative_kernel,
    energy_gap,
    potential,
    potential_ldpc,
)

logger = logging.getLogger(__name__)

PERFECT_ENTROPY = 1e-6
ORDERING_SLACK = 1e-8
SATURATION_TOL = 1e-12


class Boundary(str, Enum):
    DELTA_INF = "deltaInf"
    MINIMAL_FIXED_POINT = "minimalFixedPoint"


@dataclass(frozen=True)
class CoupledSpec:
    """
    Cadena (λ, ρ, N, w): 2N posiciones de nodos variables y N_w = 2N + w − 1
    posiciones de nodos de chequeo.
    """

    ensemble: EnsembleSpec
    N: int
    w: int
    boundary: Boundary = Boundary.DELTA_INF
    saturate: bool = False
    i0_override: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "boundary", Boundary(self.boundary))
        if self.N < 1 or self.w < 1:
            raise ParameterRangeError(f"Se requiere N ≥ 1 y w ≥ 1 (N={self.N}, w={self.w})")
        if self.ensemble.kind is EnsembleKind.LDPC and self.boundary is Boundary.MINIMAL_FIXED_POINT:
            raise PreconditionError("La frontera f₀ sólo aplica a ensambles LDGM")
        if not 1 <= self.i0 <= self.n_w:
            raise ParameterRangeError(f"i₀ = {self.i0} fuera de 1..{self.n_w}")

    @property
    def n_v(self) -> int:
        return 2 * self.N

    @property
    def n_w(self) -> int:
        return 2 * self.N + self.w - 1

    @property
    def i0(self) -> int:
        if self.i0_override is not None:
            return self.i0_override
        return self.N + math.ceil((self.w - 1) / 2)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "w": self.w,
            "boundary": self.boundary.value,
            "saturate": self.saturate,
            "i0": self.i0,
            "i0_override": self.i0_override is not None,
        }


@dataclass(frozen=True)
class ChainProfile:
    positions: Tuple[HatMeasure, ...]

    @classmethod
    def constant(cls, measure: HatMeasure, length: int) -> "ChainProfile":
        return cls(tuple([measure] * length))

    def __len__(self) -> int:
        return len(self.positions)

    def __getitem__(self, index: int) -> HatMeasure:
        return self.positions[index]

    def entropies(self) -> np.ndarray:
        return np.array([entropy(x) for x in self.positions])

    def max_entropy(self) -> float:
        return float(self.entropies().max())

    def summary(self) -> np.ndarray:
        """Matriz (N_w, 3) con H, E y 𝔅 por posición."""
        return np.array([[entropy(x), error_prob(x), bhattacharyya(x)] for x in self.positions])


@dataclass(frozen=True)
class CoupledTrace:
    profile: ChainProfile
    steps: Tuple[float, ...]
    status: DeStatus
    snapshots: Tuple[Tuple[int, np.ndarray], ...] = ()

    @property
    def converged(self) -> bool:
        return self.status is DeStatus.CONVERGED

    @property
    def iterations(self) -> int:
        return len(self.steps)


# =============================
# PASOS
# =============================
def _check_profile(spec: CoupledSpec, p: ChainProfile) -> None:
    if len(p) != spec.n_w:
        raise GridMismatchError(f"El perfil tiene {len(p)} posiciones y se esperaban {spec.n_w}")
    grid = p[0].grid
    if any(x.grid != grid for x in p.positions):
        raise GridMismatchError("Las posiciones del perfil usan grillas distintas")


def boundary_measure(spec: CoupledSpec, grid, f0: Optional[HatMeasure]) -> HatMeasure:
    """Valor virtual fuera de la cadena: Δ∞, o f₀ en el sistema modificado LDGM."""
    if spec.boundary is Boundary.DELTA_INF:
        return delta_inf(grid)
    if f0 is None:
        raise PreconditionError("La frontera f₀ requiere el punto fijo mínimo")
    return f0


def _uniform_average(measures: Sequence[HatMeasure]) -> HatMeasure:
    # Suma sobre columnas ordenadas: el resultado no depende del orden de
    # las medidas, así que un perfil simétrico sigue siendo simétrico bit a bit.
    stack = np.sort(np.stack([x.masses for x in measures]), axis=0)
    return HatMeasure(measures[0].grid, stack.sum(axis=0) / len(measures))


def _check_inputs(spec: CoupledSpec, p: ChainProfile, c: HatMeasure, n_jobs: int) -> List[HatMeasure]:
    # ρ^⊠(x_i) en LDPC, c ⊠ ρ^⊠(x_i) en LDGM
    e = spec.ensemble

    def one(x: HatMeasure) -> HatMeasure:
        r = poly_check(e.rho, x)
        return check_conv(c, r) if e.kind is EnsembleKind.LDGM else r

    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(one)(x) for x in p.positions)


def _variable_outputs(spec: CoupledSpec, checks: List[HatMeasure], c: HatMeasure,
                      count: int, n_jobs: int) -> List[HatMeasure]:
    e, w = spec.ensemble, spec.w

    def one(v: int) -> HatMeasure:
        avg = _uniform_average(checks[v:v + w])
        if e.kind is EnsembleKind.LDPC:
            return var_conv(c, poly_var(e.lam, avg))
        return poly_var(e.lam, avg)

    return Parallel(n_jobs=n_jobs, prefer="threads")(delayed(one)(v) for v in range(count))


def _update(spec: CoupledSpec, p: ChainProfile, c: HatMeasure, f0: Optional[HatMeasure],
            upto: int, n_jobs: int) -> List[HatMeasure]:
    # x_i = (1/w) Σ_k y_{i−k}, con y_v = b fuera de 1..2N
    _check_profile(spec, p)
    b = boundary_measure(spec, c.grid, f0)
    checks = _check_inputs(spec, p, c, n_jobs)
    outputs = _variable_outputs(spec, checks, c, min(upto, spec.n_v), n_jobs)

    def term(v: int) -> HatMeasure:
        return outputs[v - 1] if 1 <= v <= spec.n_v else b

    return [_uniform_average([term(i - k) for k in range(spec.w)]) for i in range(1, upto + 1)]


def coupled_step(spec: CoupledSpec, p: ChainProfile, c: HatMeasure,
                 f0: Optional[HatMeasure] = None, n_jobs: int = 1,
                 fold: bool = False) -> ChainProfile:
    """
    Una actualización sincrónica de la cadena acoplada.

    Con ``fold`` sólo se calculan las posiciones 1..⌈N_w/2⌉ y el resto se
    refleja; coincide bit a bit con la evaluación completa cuando el perfil
    de entrada es simétrico.
    """
    if fold:
        half = math.ceil(spec.n_w / 2)
        left = _update(spec, p, c, f0, half, n_jobs)
        mirrored = [left[spec.n_w - i] for i in range(half + 1, spec.n_w + 1)]
        return ChainProfile(tuple(left + mirrored))
    return ChainProfile(tuple(_update(spec, p, c, f0, spec.n_w, n_jobs)))


def modified_step(spec: CoupledSpec, p: ChainProfile, c: HatMeasure,
                  f0: Optional[HatMeasure] = None, n_jobs: int = 1) -> ChainProfile:
    """Actualiza las posiciones i ≤ i₀ y satura x_i = x_{i₀} para i > i₀."""
    if not spec.saturate:
        raise PreconditionError("modified_step requiere un CoupledSpec con saturate=True")
    head = _update(spec, p, c, f0, spec.i0, n_jobs)
    return ChainProfile(tuple(head + [head[-1]] * (spec.n_w - spec.i0)))


def system_step(spec: CoupledSpec, p: ChainProfile, c: HatMeasure,
                f0: Optional[HatMeasure] = None, n_jobs: int = 1, fold: bool = False) -> ChainProfile:
    if spec.saturate:
        return modified_step(spec, p, c, f0, n_jobs)
    return coupled_step(spec, p, c, f0, n_jobs, fold)


def coupled_fixed_point(
    spec: CoupledSpec,
    p0: ChainProfile,
    c: HatMeasure,
    stop: StopRule = StopRule(),
    f0: Optional[HatMeasure] = None,
    n_jobs: int = 1,
    snapshot_every: int = 0,
    fold: bool = False,
) -> CoupledTrace:
    """
    Itera ``coupled_step`` (o ``modified_step`` si ``spec.saturate``) hasta
    que el máximo d_H entre posiciones sucesivas baje de ``stop.tol_dh``.

    ``snapshot_every`` > 0 guarda H, E y 𝔅 por posición cada tantas
    iteraciones, además de la inicial y la final. ``fold`` evalúa media
    cadena y la refleja (sólo para perfiles iniciales simétricos).
    """
    if spec.boundary is Boundary.MINIMAL_FIXED_POINT and f0 is None:
        f0 = minimal_fixed_point(spec.ensemble, c, stop)
    p = p0
    steps: List[float] = []
    snapshots = [(0, p.summary())] if snapshot_every else []
    status = DeStatus.MAX_ITER
    for iteration in range(1, stop.max_iter + 1):
        nxt = system_step(spec, p, c, f0, n_jobs, fold)
        step = max(entropy_distance(a, b, stop.order).value for a, b in zip(nxt.positions, p.positions))
        steps.append(step)
        p = nxt
        if snapshot_every and iteration % snapshot_every == 0:
            snapshots.append((iteration, p.summary()))
        if step < stop.tol_dh:
            status = DeStatus.CONVERGED
            break
    if snapshot_every and snapshots[-1][0] != len(steps):
        snapshots.append((len(steps), p.summary()))
    if status is DeStatus.MAX_ITER:
        logger.debug("Cadena N=%d w=%d sin converger (último paso %.3e)", spec.N, spec.w, steps[-1])
    return CoupledTrace(p, tuple(steps), status, tuple(snapshots))


# =============================
# POTENCIAL ACOPLADO
# =============================
def coupled_potential(spec: CoupledSpec, p: ChainProfile, c: HatMeasure,
                      f0: Optional[HatMeasure] = None, stop: StopRule = StopRule()) -> PotentialReport:
    """
    Potencial acoplado U_c con desglose por posición.

    LDPC:
        L′(1) Σ_{i≤N_w} [H(R^⊠(x_i))/R′(1) + H(ρ^⊠(x_i)) − H(x_i ⊠ ρ^⊠(x_i))]
        − Σ_{v≤2N} H(c ⊛ L^⊛((1/w) Σ_j ρ^⊠(x_{v+j})))
    LDGM (sistema con frontera f₀):
        L′(1) Σ_i [H(c ⊠ R^⊠(x_i))/R′(1) − H(c)/R′(1) − H(x_i ⊠ c ⊠ ρ^⊠(x_i)) + H(c ⊠ ρ^⊠(x_i))]
        − Σ_v H(L^⊛((1/w) Σ_j c ⊠ ρ^⊠(x_{v+j})))
        − L′(1) Σ_{i<w} [((w−i)/w) H(f₀ ⊛ [c ⊠ ρ^⊠(x_i)]) + (i/w) H(f₀ ⊛ [c ⊠ ρ^⊠(x_{2N+i})])]
    """
    _check_profile(spec, p)
    e, w = spec.ensemble, spec.w
    k = derived_constants(e)
    checks = _check_inputs(spec, p, c, 1)

    check_terms = []
    for x, r in zip(p.positions, checks):
        if e.kind is EnsembleKind.LDPC:
            value = entropy(poly_check(e.R, x)) / k.R_prime_1 + entropy(r) - entropy(check_conv(x, r))
        else:
            value = (entropy(check_conv(c, poly_check(e.R, x))) / k.R_prime_1
                     - entropy(c) / k.R_prime_1
                     - entropy(check_conv(x, r))
                     + entropy(r))
        check_terms.append(k.L_prime_1 * value)

    variable_terms = []
    for v in range(spec.n_v):
        avg = _uniform_average(checks[v:v + w])
        out = var_conv(c, poly_var(e.L, avg)) if e.kind is EnsembleKind.LDPC else poly_var(e.L, avg)
        variable_terms.append(-entropy(out))

    terms = {"check": math.fsum(check_terms), "variable": math.fsum(variable_terms)}
    by_position = {"check": tuple(check_terms), "variable": tuple(variable_terms)}

    if e.kind is EnsembleKind.LDGM:
        if f0 is None:
            f0 = minimal_fixed_point(e, c, stop)
        boundary_terms = []
        for i in range(1, w):
            left = entropy(var_conv(f0, checks[i - 1]))
            right = entropy(var_conv(f0, checks[spec.n_v + i - 1]))
            boundary_terms.append(-k.L_prime_1 * ((w - i) / w * left + i / w * right))
        terms["boundary"] = math.fsum(boundary_terms)
        by_position["boundary"] = tuple(boundary_terms)

    return PotentialReport.from_terms(terms, by_position=by_position)


def shift(p: ChainProfile, boundary: HatMeasure) -> ChainProfile:
    """[S(x)]₁ = frontera, [S(x)]_i = x_{i−1}."""
    return ChainProfile((boundary,) + tuple(p.positions[:-1]))


def shift_derivative(spec: CoupledSpec, p: ChainProfile, c: HatMeasure,
                     f0: Optional[HatMeasure] = None) -> float:
    """
    d_x U_c(x; c)[S(x) − x] = L′(1) Σ_i H([T_c(x)_i − x_i] ⊠ ρ′^⊠(x_i) ⊠ [S(x)_i − x_i]),
    con el factor c ⊠ adicional en LDGM.
    """
    b = boundary_measure(spec, c.grid, f0)
    stepped = coupled_step(replace(spec, saturate=False), p, c, f0)
    shifted = shift(p, b)
    total = []
    for x, tx, sx in zip(p.positions, stepped.positions, shifted.positions):
        if np.array_equal(sx.masses, x.masses):
            continue
        scale, kernel = derivative_kernel(spec.ensemble, x, c)
        if kernel is None:
            continue
        weighted = (check_conv(kernel, sx), check_conv(kernel, x))
        total.append(scale * bilinear_entropy((tx, x), weighted))
    return math.fsum(total)


@dataclass(frozen=True)
class ShiftBound:
    lhs: float
    rhs: float
    slack: float
    holds: bool
    derivative: float
    second_order_bound: float
    second_order_holds: bool

    def as_dict(self) -> dict:
        return asdict(self)


def is_saturated(spec: CoupledSpec, p: ChainProfile, tol: float = SATURATION_TOL) -> bool:
    anchor = p[spec.i0 - 1]
    return all(
        np.array_equal(x.masses, anchor.masses) or entropy_distance(x, anchor).value <= tol
        for x in p.positions[spec.i0:]
    )


def shift_bound_check(
    spec: CoupledSpec,
    p: ChainProfile,
    c: HatMeasure,
    f0: Optional[HatMeasure] = None,
    slack: float = 1e-4,
    stop: StopRule = StopRule(),
) -> ShiftBound:
    """
    Verifica U_c(S(x)) − U_c(x) ≤ −U_s(x_{i₀}) (LDPC) o
    ≤ U_s(f₀) − U_s(x_{i₀}) (LDGM, con i₀ ≤ 2N), más la cota de segundo
    orden |U_c(S(x)) − U_c(x) − d U_c[S(x) − x]| ≤ K/(2w).
    """
    _check_profile(spec, p)
    if not is_saturated(spec, p):
        raise PreconditionError("El perfil no está saturado a partir de i₀")
    e = spec.ensemble
    if e.kind is EnsembleKind.LDGM:
        if spec.i0 > spec.n_v:
            raise PreconditionError(f"Se requiere i₀ ≤ 2N (i₀={spec.i0}, 2N={spec.n_v})")
        if f0 is None:
            f0 = minimal_fixed_point(e, c, stop)
        spec = replace(spec, boundary=Boundary.MINIMAL_FIXED_POINT)

    b = boundary_measure(spec, c.grid, f0)
    lhs = (coupled_potential(spec, shift(p, b), c, f0).value
           - coupled_potential(spec, p, c, f0).value)
    anchor = potential(e, p[spec.i0 - 1], c).value
    rhs = -anchor if e.kind is EnsembleKind.LDPC else potential(e, f0, c).value - anchor
    derivative = shift_derivative(spec, p, c, f0)
    bound = derived_constants(e).K / (2.0 * spec.w)

    result = ShiftBound(
        lhs=lhs,
        rhs=rhs,
        slack=slack,
        holds=lhs <= rhs + slack,
        derivative=derivative,
        second_order_bound=bound,
        second_order_holds=abs(lhs - derivative) <= bound + slack,
    )
    if not result.holds:
        logger.warning("Cota del desplazamiento violada: %.6g > %.6g + %.1e", lhs, rhs, slack)
    return result


def converse_chain_length(e: EnsembleSpec, a: HatMeasure, c: HatMeasure, w: int) -> Optional[int]:
    """
    Menor N con U_c del perfil constante en ``a`` negativo:
    (2N + w − 1)·U_s(a) + (w − 1)·H(c ⊛ L^⊛(ρ^⊠(a))) < 0.

    None si U_s(a) ≥ 0.
    """
    if e.kind is not EnsembleKind.LDPC:
        raise PreconditionError("La cota de largo de cadena sólo aplica a LDPC")
    u = potential_ldpc(e, a, c).value
    if u >= 0.0:
        return None
    edge = entropy(var_conv(c, poly_var(e.L, poly_check(e.rho, a))))
    n = 1
    while (2 * n + w - 1) * u + (w - 1) * edge >= 0.0:
        n += 1
    return n


# =============================
# BARRIDOS
# =============================
@dataclass(frozen=True)
class SweepResult:
    table: pd.DataFrame
    thresholds: pd.DataFrame
    first_failing: pd.DataFrame
    width_bounds: pd.DataFrame


def _classify_chain(e: EnsembleSpec, trace: CoupledTrace, f0: Optional[HatMeasure]) -> Tuple[str, bool]:
    if not trace.converged:
        return "maxIter", False
    if e.kind is EnsembleKind.LDPC:
        ok = trace.profile.max_entropy() < PERFECT_ENTROPY
    else:
        ok = all(is_degraded(f0, x, ORDERING_SLACK) for x in trace.profile.positions)
    return ("converged" if ok else "stuck"), ok


def _run_cell(e, N, w, h, c, f0, stop, modified, boundary) -> dict:
    spec = CoupledSpec(e, N, w, boundary=boundary, saturate=modified)
    p0 = ChainProfile.constant(delta0(c.grid), spec.n_w)
    trace = coupled_fixed_point(spec, p0, c, stop, f0)
    status, ok = _classify_chain(e, trace, f0)
    return {
        "N": N,
        "w": w,
        "h": h,
        "status": status,
        "iterations": trace.iterations,
        "terminal_max_H": trace.profile.max_entropy(),
        "converged": ok,
    }


def _empirical_thresholds(table: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for (N, w), group in table.groupby(["N", "w"], sort=True):
        group = group.sort_values("h")
        ok = group["converged"].to_numpy()
        hs = group["h"].to_numpy()
        first_bad = next((i for i, flag in enumerate(ok) if not flag), None)
        flags = []
        if first_bad is not None and ok[first_bad:].any():
            flags.append("non-monotone")
        if first_bad is None:
            h_lo, h_hi = float(hs[-1]), math.nan
        elif first_bad == 0:
            h_lo, h_hi = math.nan, float(hs[0])
        else:
            h_lo, h_hi = float(hs[first_bad - 1]), float(hs[first_bad])
        rows.append({"N": N, "w": w, "h_lo": h_lo, "h_hi": h_hi, "flags": ";".join(flags)})
    return pd.DataFrame(rows, columns=["N", "w", "h_lo", "h_hi", "flags"])


def _first_failing(table: pd.DataFrame) -> pd.DataFrame:
    rows = []
    for (w, h), group in table.groupby(["w", "h"], sort=True):
        failing = group.loc[~group["converged"], "N"]
        rows.append({"w": w, "h": h, "N": int(failing.min()) if len(failing) else None})
    return pd.DataFrame(rows, columns=["w", "h", "N"])


def saturation_sweep(
    e: EnsembleSpec,
    family: ChannelFamily,
    Ns: Sequence[int],
    ws: Sequence[int],
    h_grid: Sequence[float],
    stop: StopRule = StopRule(),
    n_jobs: int = 1,
    modified: bool = False,
    with_width_bound: bool = True,
    strategy: CandidateStrategy = CandidateStrategy(),
) -> SweepResult:
    """
    Corre la cadena desde Δ₀ para cada celda (N, w, h) y la clasifica.

    LDPC: éxito si todas las posiciones terminan con H < 1e−6.
    LDGM: éxito si toda posición es mejor que f₀ (f₀ ⪰ x_i).
    Además reporta por h el ancho suficiente K/(2ΔE) cuando ΔE > 0.
    """
    if not Ns or not ws or not len(h_grid):
        raise ParameterRangeError("El barrido necesita N, w y h no vacíos")
    boundary = Boundary.MINIMAL_FIXED_POINT if (modified and e.kind is EnsembleKind.LDGM) else Boundary.DELTA_INF
    channels = {float(h): family.density(float(h)) for h in h_grid}
    f0s = {h: (minimal_fixed_point(e, c, stop) if e.kind is EnsembleKind.LDGM else None)
           for h, c in channels.items()}

    cells = list(itertools.product(Ns, ws, channels))
    rows = Parallel(n_jobs=n_jobs, prefer="threads")(
        delayed(_run_cell)(e, N, w, h, channels[h], f0s[h], stop, modified, boundary)
        for N, w, h in tqdm(cells, desc="barrido", disable=None, leave=False)
    )
    table = pd.DataFrame(rows, columns=["N", "w", "h", "status", "iterations", "terminal_max_H", "converged"])

    K = derived_constants(e).K
    bounds = []
    for h, c in channels.items():
        gap, width = math.nan, None
        if with_width_bound:
            gap = energy_gap(e, c, strategy, stop, f0s[h]).gap
            if gap > 0.0:
                width = 0.0 if math.isinf(gap) else K / (2.0 * gap)
        bounds.append({"h": h, "gap": gap, "K": K, "width_bound": width})
    width_bounds = pd.DataFrame(bounds, columns=["h", "gap", "K", "width_bound"])
    table = table.merge(width_bounds[["h", "width_bound"]], on="h", how="left")

    logger.info("Barrido: %d celdas, %d convergentes", len(table), int(table["converged"].sum()))
    return SweepResult(table, _empirical_thresholds(table), _first_failing(table), width_bounds)
