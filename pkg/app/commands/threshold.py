import click

from commands.common import (
    EXIT_FLAGGED,
    EXIT_OK,
    RunConfig,
    common_options,
    emit_json,
    run_command,
    strategy_options,
)
from utils.colors import get_flag_color
from utils.de_single import DEFAULT_SCAN, bp_threshold, emergence_threshold, stability_threshold
from utils.ensembles import derived_constants
from utils.potential import ESTIMATORS, gap_sign_threshold, potential_threshold
from utils.provenance import write_csv
from utils.tables import create_evaluation_frame

KINDS = ("bp", "potential", "stability", "emergence", "gap-sign")


@click.command("threshold")
@common_options
@strategy_options
@click.option("--kind", "kind", type=click.Choice(KINDS), default="bp", show_default=True)
@click.option("--estimator", "estimator", type=click.Choice(ESTIMATORS), default=ESTIMATORS[0],
              show_default=True, help="Estimador del umbral de potencial.")
@click.option("--tol-h", "tol_h", type=float, help="Ancho final del intervalo en h.")
@click.option("--cross-check/--no-cross-check", "cross_check", default=True, show_default=True)
@click.option("--scan", "scan", type=int, default=DEFAULT_SCAN, show_default=True)
@click.option("--h-lo", "h_lo", type=float, default=0.0, show_default=True)
@click.option("--h-hi", "h_hi", type=float, default=1.0, show_default=True)
@run_command("threshold")
def threshold(config: RunConfig) -> int:
    """Estima un umbral (BP, potencial, estabilidad, emergencia o signo de ΔE)."""
    e, family, stop = config.ensemble(), config.family(), config.stop()
    kind, tol_h, scan = config["kind"], float(config["tol_h"]), int(config["scan"])

    if kind == "bp":
        report = bp_threshold(e, family, tol_h, stop, scan)
    elif kind == "potential":
        report = potential_threshold(e, family, config["estimator"], tol_h, stop,
                                     config["cross_check"], config.strategy(), scan)
    elif kind == "stability":
        report = stability_threshold(e, family, tol_h)
    elif kind == "emergence":
        report = emergence_threshold(e, family, tol_h, stop, scan)
    else:
        report = gap_sign_threshold(e, family, float(config["h_lo"]), float(config["h_hi"]),
                                    tol_h, stop, config.strategy(), scan)

    document = report.as_dict()
    document["channel"] = family.kind.value
    document["constants"] = derived_constants(e).as_dict()
    if config["output"]:
        write_csv(create_evaluation_frame(report), config["output"], config.to_dict())

    emit_json(document, config)
    click.secho(
        f"Umbral {kind}: [{report.h_lo:.6f}, {report.h_hi:.6f}] {' '.join(report.flags)}".rstrip(),
        fg=get_flag_color(report.flagged), err=True,
    )
    return EXIT_FLAGGED if report.flagged else EXIT_OK
