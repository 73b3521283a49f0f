"""Figure regeneration for anchoreg trajectory CSVs.

Strictly a consumer of the solver's CSV files and coordinate sidecars;
nothing here recomputes algorithm quantities.
"""

from .io import InputError, coords_sidecar_path, read_coords, read_decay
from .render import PlotSpec, plot_loglog, plot_trajectory, render

__version__ = "0.1.0"
