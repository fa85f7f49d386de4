"""
Paleta de colores de la consola
"""
COLORES_LOG = {
    'DEBUG': 'cyan',
    'INFO': 'green',
    'WARNING': 'yellow',
    'ERROR': 'red',
    'CRITICAL': 'bold_red',
}

# Aliases
POSITIVO = 'green'
NEGATIVO = 'yellow'
ALERTA = 'red'
PRINCIPAL = 'blue'
SECUNDARIO = 'cyan'


def get_status_color(status: str) -> str:
    """Color de click.secho para el estado de una corrida"""
    return {
        'converged': POSITIVO,
        'stuck': NEGATIVO,
        'maxIterReached': ALERTA,
        'maxIter': ALERTA,
    }.get(status, PRINCIPAL)


def get_flag_color(flags) -> str:
    return NEGATIVO if flags else POSITIVO
