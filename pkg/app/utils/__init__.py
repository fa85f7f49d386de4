# app/utils/__init__.py
PROJECT_NAME = 'ldpc-potential-lab'
__version__ = '0.3.0'

from .colors import COLORES_LOG, POSITIVO, NEGATIVO, ALERTA, PRINCIPAL, SECUNDARIO, get_status_color

__all__ = ['PROJECT_NAME', '__version__', 'COLORES_LOG', 'POSITIVO', 'NEGATIVO', 'ALERTA',
           'PRINCIPAL', 'SECUNDARIO', 'get_status_color']
