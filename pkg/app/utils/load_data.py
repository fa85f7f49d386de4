import copy
import json
import os
from functools import lru_cache
from pathlib import Path
from typing import Any, Mapping, Optional

import yaml
from jsonschema import Draft202012Validator

from utils.ensembles import EnsembleSpec, ensemble_from_config
from utils.errors import ConfigError, DistributionError

# =============================
# ESQUEMAS
# =============================
_COEFFICIENT = {
    "oneOf": [
        {"type": "number", "minimum": 0},
        {
            "type": "object",
            "properties": {
                "num": {"type": "integer", "minimum": 0},
                "den": {"type": "integer", "minimum": 1},
            },
            "required": ["num", "den"],
            "additionalProperties": False,
        },
    ]
}
_POLYNOMIAL = {"type": "array", "items": _COEFFICIENT, "minItems": 1}

ENSEMBLE_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "name": {"type": "string"},
        "kind": {"enum": ["ldpc", "ldgm"]},
        "lambda": _POLYNOMIAL,
        "rho": _POLYNOMIAL,
        "L": _POLYNOMIAL,
        "R": _POLYNOMIAL,
    },
    "oneOf": [{"required": ["lambda", "rho"]}, {"required": ["L", "R"]}],
    "additionalProperties": False,
}

_NUMBER_LIST = {"oneOf": [{"type": "string"}, {"type": "array", "items": {"type": "number"}}]}

RUN_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "ensemble": {"oneOf": [{"type": "string"}, {"type": "object"}]},
        "channel": {"enum": ["bec", "bsc", "bawgn"]},
        "h": {"type": "number", "minimum": 0, "maximum": 1},
        "param": {"type": "number", "minimum": 0},
        "bins": {"type": "integer", "minimum": 2},
        "tol_dh": {"type": "number", "exclusiveMinimum": 0},
        "tol_h": {"type": "number", "exclusiveMinimum": 0},
        "max_iter": {"type": "integer", "minimum": 1},
        "output": {"type": "string"},
        "dump_measure": {"type": "string"},
        "seed": {"type": "integer"},
        "jobs": {"type": "integer"},
        "kind": {"type": "string"},
        "estimator": {"type": "string"},
        "cross_check": {"type": "boolean"},
        "scan": {"type": "integer", "minimum": 1},
        "h_lo": {"type": "number"},
        "h_hi": {"type": "number"},
        "init": {"enum": ["delta0", "deltaInf"]},
        "N": {"type": "integer", "minimum": 1},
        "w": {"type": "integer", "minimum": 1},
        "modified": {"type": "boolean"},
        "i0": {"type": "integer", "minimum": 1},
        "fold": {"type": "boolean"},
        "snapshot_every": {"type": "integer", "minimum": 0},
        "check_shift": {"type": "boolean"},
        "Ns": _NUMBER_LIST,
        "ws": _NUMBER_LIST,
        "h_grid": _NUMBER_LIST,
        "width_bound": {"type": "boolean"},
        "probe": {"enum": ["bec", "bsc", "bawgn"]},
        "probe_points": {"type": "integer", "minimum": 2},
        "probe_count": {"type": "integer", "minimum": 1},
        "max_trajectory": {"type": "integer", "minimum": 2},
        "random_mixtures": {"type": "integer", "minimum": 0},
    },
    "additionalProperties": False,
}


def validate(document: Any, schema: Mapping, label: str) -> None:
    """Valida ``document`` y reporta el primer error con su ruta."""
    errors = sorted(Draft202012Validator(schema).iter_errors(document), key=lambda e: list(e.path))
    if errors:
        first = errors[0]
        where = "/".join(str(p) for p in first.path) or "(raíz)"
        raise ConfigError(f"{label} inválido en {where}: {first.message}")


# =============================
# CARGA
# =============================
def resolve_path(relative_path: str) -> Path:
    """
    Resuelve una ruta relativa al directorio actual o, si no existe ahí,
    a la raíz del repositorio y a su carpeta configs/ (por ejemplo
    "ldpc36.json" o "configs/ldpc36.json").
    """
    path = Path(relative_path).expanduser()
    if path.is_absolute() or path.exists():
        return path.resolve()
    base_path = Path(os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__)))))
    for candidate in (base_path / path, base_path / "configs" / path):
        if candidate.exists():
            return candidate.resolve()
    raise ConfigError(f"No existe el archivo: {relative_path}")


@lru_cache(maxsize=32)
def _read(file_path: str, mtime: float) -> Any:
    # Detectar extensión y usar el lector adecuado
    ext = os.path.splitext(file_path)[1].lower()
    try:
        with open(file_path, encoding="utf-8") as handle:
            if ext == ".json":
                return json.load(handle)
            if ext in (".yaml", ".yml"):
                return yaml.safe_load(handle)
    except (json.JSONDecodeError, yaml.YAMLError) as exc:
        raise ConfigError(f"No se pudo leer {file_path}: {exc}") from exc
    raise ConfigError(f"Formato de archivo no soportado: {ext}")


def load_config(relative_path: str, schema: Optional[Mapping] = None, label: str = "Documento") -> Any:
    """
    Función genérica para cargar documentos de configuración (JSON o YAML)
    con validación opcional por esquema.

    Parameters
    ----------
    relative_path : str
        Ruta al archivo. Ejemplo: "configs/ldpc36.json"

    schema : Mapping, optional
        Esquema JSON (draft 2020-12) contra el que se valida el documento.

    Returns
    -------
    Any
        Copia del documento leído (la lectura queda en caché).
    """
    path = resolve_path(relative_path)
    document = copy.deepcopy(_read(str(path), path.stat().st_mtime))
    if schema is not None:
        validate(document, schema, f"{label} ({path.name})")
    return document


def load_ensemble_document(source: Any) -> dict:
    """Documento de ensamble desde una ruta, un JSON en línea o un dict."""
    if isinstance(source, Mapping):
        document = dict(source)
        validate(document, ENSEMBLE_SCHEMA, "Ensamble")
        return document
    text = str(source).strip()
    if text.startswith("{"):
        try:
            document = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"JSON de ensamble inválido: {exc}") from exc
        validate(document, ENSEMBLE_SCHEMA, "Ensamble")
        return document
    return load_config(text, ENSEMBLE_SCHEMA, "Ensamble")


def load_ensemble(source: Any) -> EnsembleSpec:
    document = load_ensemble_document(source)
    try:
        return ensemble_from_config(document)
    except DistributionError as exc:
        raise ConfigError(f"Ensamble inválido: {exc}") from exc
