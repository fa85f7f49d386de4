"""
Jerarquía de errores del laboratorio.

Todas heredan de ``LabError`` y, según el caso, de ``ValueError`` o
``RuntimeError`` para que el código que ya captura esas excepciones siga
funcionando.
"""


class LabError(Exception):
    """Error base del laboratorio."""


class GridMismatchError(LabError, ValueError):
    """Operandos sobre grillas distintas o perfiles de largo incorrecto."""


class DistributionError(LabError, ValueError):
    """Masas o coeficientes negativos, o que no suman 1."""


class EnsembleError(DistributionError):
    """Distribución de grados inválida para el tipo de ensamble."""


class ParameterRangeError(LabError, ValueError):
    """Parámetro fuera de su dominio."""


class ConfigError(LabError, ValueError):
    """Archivo o documento de configuración inválido."""


class PreconditionError(LabError, ValueError):
    """La operación no aplica a los argumentos entregados."""


class ConvergenceError(LabError, RuntimeError):
    """Una iteración que debía converger no lo hizo."""
