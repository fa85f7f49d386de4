# app/commands/__init__.py
from .coupled import coupled
from .de import de
from .energy_gap import energy_gap_command
from .potential_curve import potential_curve_command
from .sweep import sweep
from .threshold import threshold

COMMANDS = [threshold, de, coupled, sweep, potential_curve_command, energy_gap_command]

__all__ = ['COMMANDS']
