import click
import numpy as np

from commands.common import EXIT_OK, RunConfig, common_options, emit_csv, point_options, run_command
from utils.channels import ChannelKind
from utils.de_single import minimal_fixed_point
from utils.ensembles import EnsembleKind
from utils.measure_core import entropy
from utils.potential import potential, potential_curve
from utils.provenance import fixed_digits

CURVE_DIGITS = 6


@click.command("potential-curve")
@common_options
@point_options
@click.option("--probe", "probe", type=click.Choice([k.value for k in ChannelKind]),
              default=ChannelKind.BAWGN.value, show_default=True, help="Familia de las sondas h̃.")
@click.option("--probe-points", "probe_points", type=int, default=101, show_default=True)
@run_command("potential-curve")
def potential_curve_command(config: RunConfig) -> int:
    """Escribe U_s(sonda(h̃); c) como CSV h_tilde,U_s."""
    e = config.ensemble()
    c, h = config.channel()
    grid = np.linspace(0.0, 1.0, int(config["probe_points"]))
    frame = potential_curve(e, config.family(), h, ChannelKind(config["probe"]), grid, c=c)

    extra = (f"channel_H: {h!r}",)
    if e.kind is EnsembleKind.LDGM:
        f0 = minimal_fixed_point(e, c, config.stop())
        extra += (f"f0_H: {entropy(f0)!r}", f"U_s_f0: {potential(e, f0, c).value!r}")
    emit_csv(frame, config, float_format=fixed_digits(CURVE_DIGITS), extra=extra)
    return EXIT_OK
