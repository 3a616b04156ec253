"""Standalone SVG learning-curve plots (no plotting dependency).

One plot per reward function: a mean line per algorithm, a shaded
10th-90th percentile band, and black dots marking epochs where the Welch
test between the two learning algorithms is significant.
"""
from __future__ import annotations

from .methodology import CurveSummary

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 60, 20, 40, 45

PALETTE = {
    "dqn": "#1f77b4",
    "ppo": "#ff7f0e",
    "random": "#2ca02c",
    "threshold": "#d62728",
}
FALLBACK_COLOR = "#7f7f7f"


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    step = (hi - lo) / (n - 1)
    return [lo + i * step for i in range(n)]


def learning_curve_svg(summary: CurveSummary, title: str) -> str:
    epochs = summary.epochs
    lo = min(min(v) for v in summary.p10.values())
    hi = max(max(v) for v in summary.p90.values())
    if hi - lo < 1e-9:
        lo, hi = lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    lo, hi = lo - pad, hi + pad

    plot_w = WIDTH - MARGIN_L - MARGIN_R
    plot_h = HEIGHT - MARGIN_T - MARGIN_B
    x_span = max(epochs[-1] - epochs[0], 1)

    def sx(e: float) -> float:
        return MARGIN_L + (e - epochs[0]) / x_span * plot_w

    def sy(v: float) -> float:
        return MARGIN_T + (hi - v) / (hi - lo) * plot_h

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">',
        f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.1f}" y="20" text-anchor="middle" font-size="15">{title}</text>',
        # axes
        f'<line x1="{MARGIN_L}" y1="{MARGIN_T}" x2="{MARGIN_L}" '
        f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>',
        f'<line x1="{MARGIN_L}" y1="{HEIGHT - MARGIN_B}" x2="{WIDTH - MARGIN_R}" '
        f'y2="{HEIGHT - MARGIN_B}" stroke="black"/>',
        f'<text x="{WIDTH / 2:.1f}" y="{HEIGHT - 8}" text-anchor="middle">epoch</text>',
        f'<text x="15" y="{HEIGHT / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 15 {HEIGHT / 2:.1f})">mean normalized return</text>',
    ]
    for tick in _ticks(lo, hi):
        y = sy(tick)
        parts.append(
            f'<line x1="{MARGIN_L - 4}" y1="{y:.1f}" x2="{MARGIN_L}" y2="{y:.1f}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{MARGIN_L - 8}" y="{y + 4:.1f}" text-anchor="end">{tick:.3g}</text>'
        )
    for e in epochs:
        x = sx(e)
        parts.append(
            f'<line x1="{x:.1f}" y1="{HEIGHT - MARGIN_B}" x2="{x:.1f}" '
            f'y2="{HEIGHT - MARGIN_B + 4}" stroke="black"/>'
        )
        parts.append(
            f'<text x="{x:.1f}" y="{HEIGHT - MARGIN_B + 18}" text-anchor="middle">{e}</text>'
        )

    legend_y = MARGIN_T + 6
    for algo in sorted(summary.mean):
        color = PALETTE.get(algo, FALLBACK_COLOR)
        band = " ".join(
            f"{sx(e):.1f},{sy(v):.1f}" for e, v in zip(epochs, summary.p90[algo])
        ) + " " + " ".join(
            f"{sx(e):.1f},{sy(v):.1f}"
            for e, v in zip(reversed(epochs), reversed(summary.p10[algo]))
        )
        parts.append(f'<polygon points="{band}" fill="{color}" fill-opacity="0.18"/>')
        line = " ".join(f"{sx(e):.1f},{sy(v):.1f}" for e, v in zip(epochs, summary.mean[algo]))
        parts.append(
            f'<polyline points="{line}" fill="none" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(
            f'<rect x="{WIDTH - MARGIN_R - 120}" y="{legend_y - 9}" width="12" height="12" '
            f'fill="{color}"/>'
        )
        parts.append(
            f'<text x="{WIDTH - MARGIN_R - 104}" y="{legend_y + 1}">{algo}</text>'
        )
        legend_y += 18

    for e, flag in zip(epochs, summary.significant):
        if flag:
            parts.append(
                f'<circle cx="{sx(e):.1f}" cy="{MARGIN_T + 8}" r="4" fill="black"/>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
