"""
Plot utility
Static SVG drawings of a network with its covered sub-segments, device
centres and coverage balls
"""

import logging
from pathlib import Path
from typing import Optional, Union

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
from matplotlib.patches import Circle, Polygon  # noqa: E402

from ..core.coverage import Placement, covered_intervals  # noqa: E402
from ..core.geometry import Ball, Norm  # noqa: E402
from ..core.network_model import Network  # noqa: E402

logger = logging.getLogger(__name__)

NETWORK_COLOR = "#7f7f7f"
COVERED_COLOR = "#1f4fd8"
DEVICE_COLOR = "#d62728"


def _ball_patch(x: float, y: float, ball: Ball):
    r = ball.radius
    style = dict(facecolor=DEVICE_COLOR, edgecolor=DEVICE_COLOR, alpha=0.2, linewidth=0.8)
    if ball.norm == Norm.L2:
        return Circle((x, y), r, **style)
    if ball.norm == Norm.L1:
        corners = [(x + r, y), (x, y + r), (x - r, y), (x, y - r)]
    else:
        corners = [(x + r, y + r), (x - r, y + r), (x - r, y - r), (x + r, y - r)]
    return Polygon(corners, closed=True, **style)


def plot_placement(
    net: Network,
    placement: Optional[Placement],
    path: Union[str, Path],
    title: Optional[str] = None,
) -> Path:
    """
    Write an SVG of the network (stroke width proportional to ω_e), covered
    sub-segments in blue, device centres as red stars and their balls

    Args:
        net: Network
        placement: Devices to draw (None draws the bare network)
        path: Output .svg path
        title: Optional figure title

    Returns:
        The written path
    """
    path = Path(path)
    plt.rcParams["svg.hashsalt"] = "leak-cover"
    fig, ax = plt.subplots(figsize=(8, 8))

    origins, targets, weights = net.edge_arrays()
    top = float(weights.max()) if len(weights) and weights.max() > 0 else 1.0
    widths = 0.5 + 3.0 * weights / top
    for o, f, width in zip(origins, targets, widths):
        ax.plot([o[0], f[0]], [o[1], f[1]], color=NETWORK_COLOR, linewidth=width, solid_capstyle="round", zorder=1)
    nodes = net.node_array()
    if len(nodes):
        ax.scatter(nodes[:, 0], nodes[:, 1], s=6, color=NETWORK_COLOR, zorder=2)

    if placement is not None and placement.devices:
        covered = covered_intervals(net, placement.devices)
        for i, edge_id in enumerate(net.edge_ids):
            o, f = origins[i], targets[i]
            for lo, hi in covered.get(edge_id, []):
                a, b = o + lo * (f - o), o + hi * (f - o)
                ax.plot([a[0], b[0]], [a[1], b[1]], color=COVERED_COLOR, linewidth=widths[i] + 0.5, zorder=3)
        for device in placement.devices:
            ax.add_patch(_ball_patch(device.x, device.y, device.ball))
        ax.scatter([d.x for d in placement.devices], [d.y for d in placement.devices],
                   marker="*", s=90, color=DEVICE_COLOR, zorder=4)

    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", bbox_inches="tight", metadata={"Date": None})
    plt.close(fig)
    logger.info("Wrote %s", path)
    return path
