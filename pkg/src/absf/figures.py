"""Figure rendering for pipeline runs (axial overlay, radius fits, fill).

Rendered with the Agg backend straight to files; nothing here is needed
by the numeric pipeline, so matplotlib stays an import of this module
only.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .geometry import SideKind, sample_path
from .metrology import _project_to_plane  # plane projection shared with the fit
from .pipeline import arc_window_points, PipelineResult

__all__ = ["axial_overlay", "radius_fit_figure", "fill_profile_figure", "render_run_figures"]

_SIDE_COLORS = {"left": "tab:blue", "right": "tab:red"}


def axial_overlay(scenario, plan, traces=None, transform=None, path=None, dpi=130):
    """Top-down view: body outline, corridors, planned paths, meeting point,
    and (optionally) registered trace samples."""
    fig, ax = plt.subplots(figsize=(7.0, 7.0))
    verts = np.vstack([scenario.model.axial_section, scenario.model.axial_section[:1]])
    ax.plot(verts[:, 0], verts[:, 1], "k-", lw=1.5, label="body outline")

    for c in scenario.model.corridors:
        a = c.entry[:2]
        b = (c.entry + c.length * c.axis)[:2]
        perp = np.array([-c.axis[1], c.axis[0]]) * c.radius
        for sgn in (1.0, -1.0):
            ax.plot([a[0] + sgn * perp[0], b[0] + sgn * perp[0]],
                    [a[1] + sgn * perp[1], b[1] + sgn * perp[1]],
                    color="gray", lw=0.9, ls="--")

    for side in ("left", "right"):
        pts = sample_path(*plan.side(side), 0.5)
        ax.plot(pts[:, 0], pts[:, 1], color=_SIDE_COLORS[side], lw=2.0,
                label=f"{side} planned path")
        ax.plot(pts[0, 0], pts[0, 1], marker="s", color=_SIDE_COLORS[side], ms=5)

    if traces is not None and transform is not None:
        for side in ("left", "right"):
            for tr in traces[side]:
                reg = transform.apply(tr.insertion())
                ax.plot(reg[:, 0], reg[:, 1], ".", color=_SIDE_COLORS[side],
                        ms=1.5, alpha=0.25)

    mp = plan.meeting_point
    ax.plot(mp[0], mp[1], "k*", ms=14, label="meeting point")
    ax.annotate(
        f"angle {plan.theta_deg:.1f} deg\ngap {plan.tip_gap:.2f} mm",
        xy=(mp[0], mp[1]), xytext=(mp[0] + 6, mp[1] - 12),
        fontsize=9, arrowprops=dict(arrowstyle="->", lw=0.8),
    )
    ax.set_aspect("equal")
    ax.set_xlabel("x (mm)")
    ax.set_ylabel("y (mm), anterior up")
    ax.set_title(f"{scenario.name}: axial overlay")
    ax.legend(loc="lower left", fontsize=8)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        return Path(path)
    return fig


def radius_fit_figure(points, fitted_r, ideal_r, side, path=None, dpi=130):
    """Plane-projected arc samples with the fitted circle."""
    xy = _project_to_plane(np.asarray(points, float))
    from .metrology import _kasa_fit

    center, _ = _kasa_fit(xy)
    fig, ax = plt.subplots(figsize=(5.5, 5.5))
    ax.plot(xy[:, 0], xy[:, 1], ".", ms=3, color=_SIDE_COLORS.get(side, "tab:blue"),
            label="arc samples")
    ang = np.linspace(0.0, 2.0 * np.pi, 400)
    ax.plot(center[0] + fitted_r * np.cos(ang), center[1] + fitted_r * np.sin(ang),
            "k-", lw=1.0, label=f"fit r = {fitted_r:.2f} mm")
    ax.set_aspect("equal")
    ax.set_title(f"{side} bend radius (nominal {ideal_r:.0f} mm)")
    ax.set_xlabel("in-plane u (mm)")
    ax.set_ylabel("in-plane v (mm)")
    ax.legend(fontsize=8)
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        return Path(path)
    return fig


def fill_profile_figure(history, bridge_span, path=None, dpi=130):
    """Filled interval vs time with the bridge span and latch point."""
    t = np.array([h[0] for h in history])
    lo = np.array([h[1].s_lo for h in history])
    hi = np.array([h[1].s_hi for h in history])
    bridged = np.array([h[1].bridged for h in history])
    fig, ax = plt.subplots(figsize=(6.5, 4.0))
    ax.fill_between(t, lo, hi, alpha=0.35, label="filled interval")
    ax.axhline(bridge_span[0], color="k", lw=0.8, ls="--")
    ax.axhline(bridge_span[1], color="k", lw=0.8, ls="--", label="bridge span")
    if bridged.any():
        t_b = t[np.argmax(bridged)]
        ax.axvline(t_b, color="tab:green", lw=1.2, label=f"bridged at {t_b:.0f} s")
    ax.set_xlabel("time (s)")
    ax.set_ylabel("path coordinate s (mm)")
    ax.set_title("Injection fill front")
    ax.legend(fontsize=8, loc="lower right")
    fig.tight_layout()
    if path is not None:
        fig.savefig(path, dpi=dpi)
        plt.close(fig)
        return Path(path)
    return fig


def render_run_figures(result: PipelineResult, scenario, out_dir) -> dict[str, Path]:
    """Render the standard run figures next to the delimited outputs."""
    out = Path(out_dir)
    artifacts: dict[str, Path] = {}
    transform = next(iter(result.evaluations.values())).report.transform
    artifacts["fig_overlay"] = axial_overlay(
        scenario, result.plan, result.traces, transform, out / "overlay.png"
    )
    for side, ev in result.evaluations.items():
        if ev.report.fitted_r is None:
            continue
        tr = result.traces[side][0].transformed(transform.rotation, transform.translation)
        pts = arc_window_points(tr, ev.report.changeover_index)
        artifacts[f"fig_radius_{side}"] = radius_fit_figure(
            pts, ev.report.fitted_r, ev.report.ideal_r, side,
            out / f"radius_fit_{side}.png",
        )
    from .cementsim import FillChannel

    channel = result.fill_history[0][1].channel
    artifacts["fig_fill"] = fill_profile_figure(
        result.fill_history, channel.bridge_span, out / "fill_profile.png"
    )
    return artifacts
