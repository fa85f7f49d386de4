import click

from commands.common import (
    EXIT_FLAGGED,
    EXIT_OK,
    RunConfig,
    common_options,
    emit_csv,
    emit_json,
    point_options,
    run_command,
)
from utils.colors import get_status_color
from utils.de_single import de_fixed_point
from utils.ensembles import EnsembleKind
from utils.measure_core import delta0, delta_inf
from utils.potential import ldgm_error_floor, potential
from utils.provenance import write_csv
from utils.tables import create_measure_frame, create_trace_frame, measure_header

INITS = {"delta0": delta0, "deltaInf": delta_inf}


@click.command("de")
@common_options
@point_options
@click.option("--init", "init", type=click.Choice(sorted(INITS)), default="delta0", show_default=True,
              help="Densidad inicial de la recursión.")
@click.option("--dump-measure", "dump_measure", type=click.Path(dir_okay=False),
              help="Escribe la densidad final (m_center, mass; átomos en el encabezado).")
@run_command("de")
def de(config: RunConfig) -> int:
    """Itera DE del sistema simple y escribe la traza (iteration, H, B, E, step)."""
    e, stop = config.ensemble(), config.stop()
    c, h = config.channel()
    trace = de_fixed_point(e, INITS[config["init"]](c.grid), c, stop)
    if config["dump_measure"]:
        write_csv(create_measure_frame(trace.terminal), config["dump_measure"], config.to_dict(),
                  extra=measure_header(trace.terminal))

    to_file = emit_csv(create_trace_frame(trace), config)
    if to_file:
        summary = {
            "h": h,
            "status": trace.status.value,
            "iterations": trace.iterations,
            "terminal_H": trace.iterates[-1].entropy,
            "terminal_E": trace.iterates[-1].error_prob,
            "potential": potential(e, trace.terminal, c).value,
        }
        if e.kind is EnsembleKind.LDGM:
            summary["error_floor"] = ldgm_error_floor(e, c, stop=stop)
        emit_json(summary, config)

    click.secho(f"DE {trace.status.value} tras {trace.iterations} iteraciones",
                fg=get_status_color(trace.status.value), err=True)
    return EXIT_OK if trace.converged else EXIT_FLAGGED
