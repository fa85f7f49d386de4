"""
Encabezados de procedencia: cada artefacto lleva la configuración resuelta
y la versión de la librería. Sin marcas de tiempo, para que dos corridas
iguales produzcan archivos idénticos.
"""
import functools
import io
import json
import math
from pathlib import Path
from typing import Any, Callable, Iterable, Mapping, Optional, Union

import numpy as np
import pandas as pd

from utils import PROJECT_NAME, __version__


def _clean(value: Any) -> Any:
    # JSON no admite inf/nan; se escriben como texto
    if isinstance(value, Mapping):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return str(value)
    return value


def fixed_digits(digits: int) -> Callable[[float], str]:
    """
    Formato posicional (sin exponente) con ``digits`` cifras significativas,
    para ``float_format`` de ``DataFrame.to_csv``.
    """
    return functools.partial(
        np.format_float_positional, precision=digits, unique=False, fractional=False, trim="-"
    )


FloatFormat = Union[str, Callable[[float], str]]


def dump_json(document: Mapping, indent: Optional[int] = 2) -> str:
    return json.dumps(_clean(document), sort_keys=True, indent=indent, ensure_ascii=False)


def build_header(config: Mapping, extra: Iterable[str] = ()) -> str:
    lines = [
        f"# config: {dump_json(config, indent=None)}",
        f"# version: {PROJECT_NAME} {__version__}",
    ]
    lines.extend(f"# {line}" for line in extra)
    return "\n".join(lines) + "\n"


def attach_provenance(report: Mapping, config: Mapping) -> dict:
    document = dict(report)
    document["config"] = dict(config)
    document["version"] = __version__
    return document


def render_csv(frame: pd.DataFrame, config: Mapping, float_format: FloatFormat = "%.12g",
               extra: Iterable[str] = ()) -> str:
    buffer = io.StringIO()
    buffer.write(build_header(config, extra))
    frame.to_csv(buffer, index=False, float_format=float_format, lineterminator="\n")
    return buffer.getvalue()


def write_csv(frame: pd.DataFrame, path: str, config: Mapping, float_format: FloatFormat = "%.12g",
              extra: Iterable[str] = ()) -> Path:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    target.write_text(render_csv(frame, config, float_format, extra), encoding="utf-8")
    return target
