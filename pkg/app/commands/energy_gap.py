import click

from commands.common import (
    EXIT_FLAGGED,
    EXIT_OK,
    RunConfig,
    common_options,
    emit_json,
    point_options,
    run_command,
    strategy_options,
)
from utils.colors import get_flag_color
from utils.de_single import minimal_fixed_point
from utils.ensembles import EnsembleKind, derived_constants
from utils.potential import energy_gap, ldgm_error_floor


@click.command("energy-gap")
@common_options
@point_options
@strategy_options
@run_command("energy-gap")
def energy_gap_command(config: RunConfig) -> int:
    """Cota superior de la brecha de energía ΔE(c) en formato JSON."""
    e, stop = config.ensemble(), config.stop()
    c, h = config.channel()
    f0 = minimal_fixed_point(e, c, stop) if e.kind is EnsembleKind.LDGM else None
    report = energy_gap(e, c, config.strategy(), stop, f0)

    document = report.as_dict()
    document["h"] = h
    if report.gap > 0.0 and not report.infinite:
        document["width_bound"] = derived_constants(e).K / (2.0 * report.gap)
    if f0 is not None:
        document["error_floor"] = ldgm_error_floor(e, c, f0, stop)
    emit_json(document, config)

    click.secho(f"ΔE = {document['gap']} ({report.argmin or 'sin candidatos'})",
                fg=get_flag_color(report.unverified), err=True)
    return EXIT_FLAGGED if report.unverified else EXIT_OK
