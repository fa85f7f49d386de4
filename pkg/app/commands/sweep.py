import click

from commands.common import (
    EXIT_OK,
    RunConfig,
    common_options,
    emit_csv,
    emit_json,
    parse_number_list,
    run_command,
    strategy_options,
)
from utils.coupled import saturation_sweep
from utils.errors import ConfigError
from utils.tables import create_sweep_frame


def _records(frame) -> list:
    # NaN → None para que el JSON sea válido
    return frame.astype(object).where(frame.notna(), None).to_dict(orient="records")


@click.command("sweep")
@common_options
@strategy_options
@click.option("--N", "Ns", help='Largos N: "16,32,64".')
@click.option("--w", "ws", help='Anchos w: "1,2,3,4".')
@click.option("--h-grid", "h_grid", help='Entropías: "0.44:0.48:0.005" o "0.44,0.45".')
@click.option("--modified", "modified", is_flag=True, default=False)
@click.option("--width-bound/--no-width-bound", "width_bound", default=True, show_default=True,
              help="Reporta el ancho suficiente K/(2ΔE) por h.")
@click.option("--jobs", "jobs", type=int, default=1, show_default=True)
@run_command("sweep")
def sweep(config: RunConfig) -> int:
    """Barrido (N, w, h) de la cadena acoplada con umbrales empíricos por celda."""
    Ns = parse_number_list(config["Ns"], int)
    ws = parse_number_list(config["ws"], int)
    h_grid = parse_number_list(config["h_grid"], float)
    if not (Ns and ws and h_grid):
        raise ConfigError("El barrido necesita --N, --w y --h-grid")

    e = config.ensemble()
    result = saturation_sweep(e, config.family(), Ns, ws, h_grid, config.stop(), int(config["jobs"]),
                              bool(config["modified"]), bool(config["width_bound"]), config.strategy())

    if emit_csv(create_sweep_frame(result), config):
        emit_json({
            "thresholds": _records(result.thresholds),
            "first_failing": _records(result.first_failing),
            "width_bounds": _records(result.width_bounds),
        }, config)
    for row in result.thresholds.itertuples(index=False):
        click.secho(f"N={row.N} w={row.w}: h ∈ [{row.h_lo}, {row.h_hi}] {row.flags}".rstrip(),
                    fg="yellow" if row.flags else "green", err=True)
    return EXIT_OK
