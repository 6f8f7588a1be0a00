"""PNG rendering of densities and histograms.

Images are for looking at only; nothing reads them back. Output is
deterministic: no timestamps or software tags are embedded.
"""
import io
import logging

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib import image
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from pilotwave.equilibrium import HistogramDensity
from pilotwave.errors import IoError, ShapeMismatch
from pilotwave.fields import RealField, ScalarField, SpinorField, density_values

PNG_MIME = "image/png"
COLORMAP = "viridis"
_METADATA = {"Software": None}

logger = logging.getLogger(__name__)


def _coordinates_and_values(item):
    """Axis coordinates (one array per axis) and the real values to draw."""
    if isinstance(item, HistogramDensity):
        centres = [0.5 * (e[1:] + e[:-1]) for e in item.edges]
        return centres, np.asarray(item.masses)
    if isinstance(item, (ScalarField, SpinorField)):
        grid = item.grid
        return [grid.axis(a) for a in range(grid.dims)], density_values(item)
    if isinstance(item, RealField):
        grid = item.grid
        return [grid.axis(a) for a in range(grid.dims)], np.asarray(item.values)
    raise ShapeMismatch(f"Cannot render a {type(item).__name__}")


def render_heatmap(item, target):
    """Render a 1D item as a line plot or a 2D item as a heat map.

    In two dimensions pixel columns follow axis 0 and pixel rows axis 1,
    with the lower extent at the bottom left.

    Args:
        item: A ScalarField or SpinorField (drawn as |psi|^2), a RealField
            or a HistogramDensity.
        target: A path or a writable binary file.

    Raises:
        IoError: If the image cannot be written.
    """
    coordinates, values = _coordinates_and_values(item)
    logger.debug("Rendering a %dD %s", values.ndim, type(item).__name__)
    try:
        if values.ndim == 2:
            image.imsave(
                target,
                values.T,
                origin="lower",
                cmap=COLORMAP,
                vmin=float(values.min()),
                vmax=float(values.max()),
                format="png",
                metadata=_METADATA,
            )
        else:
            figure = Figure(figsize=(6.4, 4.0), dpi=100)
            FigureCanvasAgg(figure)
            axes = figure.add_subplot()
            axes.plot(coordinates[0], values, linewidth=1.0)
            axes.set_xlim(coordinates[0][0], coordinates[0][-1])
            axes.set_xlabel("x")
            figure.savefig(target, format="png", metadata=_METADATA)
    except (OSError, ValueError) as e:
        raise IoError(f"Cannot render image: {e}") from e


def render_to_archive(archive, name, item):
    buffer = io.BytesIO()
    render_heatmap(item, buffer)
    return archive.add(name, buffer.getvalue(), mime=PNG_MIME)
