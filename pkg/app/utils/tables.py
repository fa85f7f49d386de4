import pandas as pd

from utils.coupled import CoupledTrace, SweepResult
from utils.de_single import DeTrace, ThresholdReport
from utils.measure_core import HatMeasure


def create_trace_frame(trace: DeTrace) -> pd.DataFrame:
    """Traza de DE: una fila por iteración"""
    return pd.DataFrame(
        [(it.iteration, it.entropy, it.bhattacharyya, it.error_prob, it.step) for it in trace.iterates],
        columns=["iteration", "H", "B", "E", "step"],
    )


def create_profile_frame(trace: CoupledTrace) -> pd.DataFrame:
    """Instantáneas del perfil acoplado (posiciones desde 1)"""
    rows = []
    for iteration, summary in trace.snapshots or ((trace.iterations, trace.profile.summary()),):
        for position, (h, e, b) in enumerate(summary, start=1):
            rows.append((iteration, position, h, e, b))
    return pd.DataFrame(rows, columns=["iteration", "position", "H", "E", "B"])


def create_measure_frame(x: HatMeasure) -> pd.DataFrame:
    """Celdas interiores; los átomos van en el encabezado"""
    return pd.DataFrame({"m_center": x.grid.centers, "mass": x.interior})


def measure_header(x: HatMeasure) -> list:
    return [f"atom0: {x.atom0!r}", f"atom1: {x.atom1!r}"]


def create_evaluation_frame(report: ThresholdReport) -> pd.DataFrame:
    verdicts = {True: "yes", False: "no", None: "unknown"}
    return pd.DataFrame(
        [(h, verdicts[v]) for h, v in report.evaluations],
        columns=["h", "verdict"],
    )


def create_sweep_frame(result: SweepResult) -> pd.DataFrame:
    return result.table.sort_values(["N", "w", "h"]).reset_index(drop=True)
