import sys

import click

from commands import COMMANDS
from commands.common import EXIT_CONFIG, EXIT_NUMERIC
from utils import PROJECT_NAME, __version__
from utils.errors import ConfigError, LabError, ParameterRangeError, PreconditionError
from utils.logger import apply_global_logging


# ========================================
# GRUPO DE COMANDOS
# ========================================
class LabGroup(click.Group):
    """Traduce los errores de la librería a códigos de salida."""

    def invoke(self, ctx: click.Context):
        try:
            rv = super().invoke(ctx)
        except (ConfigError, ParameterRangeError, PreconditionError) as exc:
            click.secho(f"⚠️ Error de configuración: {exc}", fg="yellow", err=True)
            ctx.exit(EXIT_CONFIG)
        except LabError as exc:
            click.secho(f"❌ Error numérico: {exc}", fg="red", err=True)
            ctx.exit(EXIT_NUMERIC)
        if isinstance(rv, int) and rv:
            ctx.exit(rv)
        return rv


@click.group(cls=LabGroup)
@click.option("-v", "--verbose", count=True, help="-v para INFO, -vv para DEBUG.")
@click.version_option(__version__, prog_name=PROJECT_NAME)
def cli(verbose: int) -> None:
    """Laboratorio de evolución de densidades, potenciales y umbrales LDPC/LDGM."""
    apply_global_logging(verbose)


for command in COMMANDS:
    cli.add_command(command)


# ========================================
# PUNTO DE ENTRADA
# ========================================
def main() -> None:
    cli(prog_name=PROJECT_NAME)


if __name__ == "__main__":
    sys.exit(main())
