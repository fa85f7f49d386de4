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
from utils.coupled import (
    Boundary,
    ChainProfile,
    CoupledSpec,
    coupled_fixed_point,
    coupled_potential,
    shift_bound_check,
)
from utils.de_single import minimal_fixed_point
from utils.ensembles import EnsembleKind
from utils.measure_core import delta0, delta_inf
from utils.tables import create_profile_frame

INITS = {"delta0": delta0, "deltaInf": delta_inf}


@click.command("coupled")
@common_options
@point_options
@click.option("--N", "N", type=int, help="Medio largo de la cadena (2N posiciones variables).")
@click.option("--w", "w", type=int, help="Ancho de acoplamiento.")
@click.option("--modified", "modified", is_flag=True, default=False,
              help="Sistema modificado: satura las posiciones a partir de i₀.")
@click.option("--i0", "i0", type=int, help="Posición de saturación (por defecto N + ⌈(w−1)/2⌉).")
@click.option("--fold", "fold", is_flag=True, default=False,
              help="Evalúa media cadena y la refleja.")
@click.option("--init", "init", type=click.Choice(sorted(INITS)), default="delta0", show_default=True)
@click.option("--snapshot-every", "snapshot_every", type=int, default=0, show_default=True)
@click.option("--check-shift", "check_shift", is_flag=True, default=False,
              help="Verifica la cota del desplazamiento sobre el perfil final.")
@click.option("--jobs", "jobs", type=int, default=1, show_default=True)
@run_command("coupled")
def coupled(config: RunConfig) -> int:
    """Itera la cadena acoplada y escribe el perfil (iteration, position, H, E, B)."""
    e, stop = config.ensemble(), config.stop()
    c, h = config.channel()
    modified = bool(config["modified"])
    ldgm = e.kind is EnsembleKind.LDGM
    boundary = Boundary.MINIMAL_FIXED_POINT if (modified and ldgm) else Boundary.DELTA_INF
    spec = CoupledSpec(e, int(config.require("N")), int(config.require("w")),
                       boundary=boundary, saturate=modified, i0_override=config["i0"])

    f0 = minimal_fixed_point(e, c, stop) if ldgm else None
    p0 = ChainProfile.constant(INITS[config["init"]](c.grid), spec.n_w)
    trace = coupled_fixed_point(spec, p0, c, stop, f0, int(config["jobs"]),
                                int(config["snapshot_every"]), bool(config["fold"]) and not modified)

    to_file = emit_csv(create_profile_frame(trace), config)
    summary = {
        "h": h,
        "chain": spec.as_dict(),
        "status": trace.status.value,
        "iterations": trace.iterations,
        "max_H": trace.profile.max_entropy(),
    }
    if to_file:
        summary["potential"] = coupled_potential(spec, trace.profile, c, f0, stop).as_dict()
    if config["check_shift"]:
        summary["shift_bound"] = shift_bound_check(spec, trace.profile, c, f0, stop=stop).as_dict()
    if to_file or config["check_shift"]:
        emit_json(summary, config)

    click.secho(f"Cadena N={spec.N} w={spec.w}: {trace.status.value}, max H = {summary['max_H']:.3e}",
                fg=get_status_color(trace.status.value), err=True)
    flagged = not trace.converged
    if config["check_shift"]:
        flagged = flagged or not summary["shift_bound"]["holds"]
    return EXIT_FLAGGED if flagged else EXIT_OK
