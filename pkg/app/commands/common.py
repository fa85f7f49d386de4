"""
Opciones compartidas por los subcomandos y resolución de la configuración
de una corrida.

Precedencia: valores por defecto < variables de entorno < archivo --config
< banderas de la línea de comandos.
"""
import functools
import logging
from dataclasses import dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import click
import pandas as pd
from click.core import ParameterSource

from utils.channels import ChannelFamily, ChannelKind, density_from_param
from utils.de_single import DEFAULT_MAX_ITER, DEFAULT_TOL_DH, DEFAULT_TOL_H, StopRule
from utils.ensembles import EnsembleSpec
from utils.errors import ConfigError
from utils.load_data import RUN_SCHEMA, load_config, load_ensemble, load_ensemble_document, validate
from utils.measure_core import DEFAULT_BINS, GridSpec, HatMeasure, entropy
from utils.potential import CandidateStrategy
from utils.provenance import FloatFormat, attach_provenance, dump_json, render_csv, write_csv

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_FLAGGED = 3
EXIT_NUMERIC = 4

DEFAULT_ENSEMBLE = "configs/ldpc36.json"
DEFAULT_TRAJECTORY = 64

DEFAULTS: Dict[str, Any] = {
    "ensemble": DEFAULT_ENSEMBLE,
    "channel": ChannelKind.BSC.value,
    "bins": DEFAULT_BINS,
    "tol_dh": DEFAULT_TOL_DH,
    "tol_h": DEFAULT_TOL_H,
    "max_iter": DEFAULT_MAX_ITER,
}


# =============================
# CONFIGURACIÓN DE LA CORRIDA
# =============================
@dataclass(frozen=True)
class RunConfig:
    """Configuración resuelta; es lo que se escribe en los encabezados."""

    command: str
    values: Mapping[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values.get(key)

    def require(self, key: str) -> Any:
        value = self.values.get(key)
        if value is None:
            raise ConfigError(f"Falta el parámetro obligatorio '{key}' para '{self.command}'")
        return value

    def ensemble(self) -> EnsembleSpec:
        return load_ensemble(self.values["ensemble"])

    def grid(self) -> GridSpec:
        return GridSpec(int(self.values["bins"]))

    def family(self, key: str = "channel") -> ChannelFamily:
        return ChannelFamily(ChannelKind(self.values[key]), self.grid())

    def stop(self) -> StopRule:
        return StopRule(tol_dh=float(self.values["tol_dh"]), max_iter=int(self.values["max_iter"]))

    def strategy(self) -> CandidateStrategy:
        defaults = CandidateStrategy()
        return CandidateStrategy(
            probe_count=int(self.values.get("probe_count") or defaults.probe_count),
            trajectory_limit=int(self.values.get("max_trajectory") or DEFAULT_TRAJECTORY),
            random_mixtures=int(self.values.get("random_mixtures") or 0),
            seed=int(self.values.get("seed") or 0),
        )

    def channel(self) -> Tuple[HatMeasure, float]:
        """Densidad del canal a partir de ``h`` o de ``param`` (excluyentes)."""
        h, param = self.values.get("h"), self.values.get("param")
        family = self.family()
        if h is not None and param is not None:
            raise ConfigError("Indica sólo uno de --h o --param")
        if param is not None:
            c = density_from_param(family, float(param))
            return c, entropy(c)
        if h is None:
            raise ConfigError("Falta el punto del canal: indica --h o --param")
        return family.density(float(h)), float(h)

    def to_dict(self) -> dict:
        document = {"command": self.command}
        document.update(self.values)
        return document


def resolve_run_config(ctx: click.Context, command: str, params: Dict[str, Any]) -> RunConfig:
    params = dict(params)
    config_path = params.pop("config_path", None)
    file_values = load_config(config_path, RUN_SCHEMA, "Configuración") if config_path else {}
    if file_values is None:
        file_values = {}

    defaults: Dict[str, Any] = dict(DEFAULTS)
    env: Dict[str, Any] = {}
    cli: Dict[str, Any] = {}
    for key, value in params.items():
        if value is None:
            continue
        source = ctx.get_parameter_source(key)
        if source is ParameterSource.ENVIRONMENT:
            env[key] = value
        elif source in (ParameterSource.COMMANDLINE, ParameterSource.PROMPT):
            cli[key] = value
        else:
            defaults[key] = value

    values = {**defaults, **env, **file_values, **cli}
    validate(values, RUN_SCHEMA, "Configuración")
    values["ensemble"] = load_ensemble_document(values["ensemble"])
    logger.info("Configuración de '%s': %s", command, dump_json(values, indent=None))
    return RunConfig(command, dict(sorted(values.items())))


# =============================
# OPCIONES
# =============================
def _apply(options: List[Callable], func: Callable) -> Callable:
    for option in reversed(options):
        func = option(func)
    return func


def common_options(func: Callable) -> Callable:
    options = [
        click.option("--config", "config_path", type=click.Path(dir_okay=False),
                     help="Archivo JSON/YAML con la configuración de la corrida."),
        click.option("--ensemble", "ensemble", help="Ruta a un ensamble (JSON/YAML) o JSON en línea."),
        click.option("--channel", "channel", type=click.Choice([k.value for k in ChannelKind]),
                     help="Familia de canales (por defecto bsc)."),
        click.option("--bins", "bins", type=int, envvar="LDPCLAB_BINS", show_envvar=True,
                     help=f"Celdas interiores de la grilla (por defecto {DEFAULT_BINS})."),
        click.option("--tol-dh", "tol_dh", type=float, help="Tolerancia de d_H entre iterados."),
        click.option("--max-iter", "max_iter", type=int, help="Máximo de iteraciones de DE."),
        click.option("--output", "output", type=click.Path(dir_okay=False),
                     help="Archivo de salida; sin él, el artefacto va a stdout."),
    ]
    return _apply(options, func)


def point_options(func: Callable) -> Callable:
    options = [
        click.option("--h", "h", type=float, help="Entropía del canal."),
        click.option("--param", "param", type=float, help="Parámetro nativo del canal (ε, p o σ)."),
    ]
    return _apply(options, func)


def strategy_options(func: Callable) -> Callable:
    options = [
        click.option("--probe-count", "probe_count", type=int, help="Sondas por familia (32)."),
        click.option("--max-trajectory", "max_trajectory", type=int,
                     help=f"Iterados de la trayectoria usados como candidatos ({DEFAULT_TRAJECTORY})."),
        click.option("--random-mixtures", "random_mixtures", type=int, help="Mezclas aleatorias extra."),
        click.option("--seed", "seed", type=int, help="Semilla de las mezclas aleatorias."),
    ]
    return _apply(options, func)


def run_command(name: str) -> Callable:
    """Resuelve la configuración antes de llamar al cuerpo del subcomando."""
    def decorator(body: Callable[[RunConfig], int]) -> Callable:
        @click.pass_context
        @functools.wraps(body)
        def wrapper(ctx: click.Context, **params) -> int:
            return body(resolve_run_config(ctx, name, params))
        return wrapper
    return decorator


# =============================
# SALIDAS
# =============================
def emit_csv(frame: pd.DataFrame, config: RunConfig, float_format: FloatFormat = "%.12g",
             extra: Tuple[str, ...] = ()) -> bool:
    """Escribe el CSV en --output o en stdout. Devuelve True si fue a archivo."""
    header = config.to_dict()
    if config["output"]:
        path = write_csv(frame, config["output"], header, float_format, extra)
        logger.info("Escrito %s (%d filas)", path, len(frame))
        return True
    click.echo(render_csv(frame, header, float_format, extra), nl=False)
    return False


def emit_json(report: Mapping, config: RunConfig) -> None:
    click.echo(dump_json(attach_provenance(report, config.to_dict())))


def parse_number_list(value: Any, cast: Callable = float) -> list:
    """
    Lista de números desde "a,b,c", "inicio:fin:paso" o una lista.
    """
    if value is None:
        return []
    try:
        if isinstance(value, (list, tuple)):
            return [cast(v) for v in value]
        text = str(value).strip()
        if ":" in text:
            start, stop, step = (float(part) for part in text.split(":"))
            if step <= 0.0 or stop < start:
                raise ValueError(text)
            count = int(round((stop - start) / step))
            return [cast(round(start + i * step, 12)) for i in range(count + 1)]
        return [cast(part) for part in text.split(",") if part.strip()]
    except ValueError as exc:
        raise ConfigError(f"Lista numérica inválida: {value!r}") from exc
