"""Static trajectory rendering of episode logs (Pillow; deterministic bytes)."""

from __future__ import annotations

from PIL import Image, ImageDraw

from gridbench.grids import FREE, OBSTACLE
from gridbench.harness import logs as loglib

SCALE = 8  # pixels per cell

COLOR_FREE = (255, 255, 255)
COLOR_OBSTACLE = (40, 40, 40)
COLOR_UNKNOWN = (180, 180, 180)
COLOR_OBJECT = (200, 60, 60)
COLOR_PICKABLE = (240, 150, 40)
AGENT_COLORS = (
    (30, 90, 200), (20, 150, 60), (150, 40, 160), (200, 120, 20),
    (0, 150, 150), (120, 120, 0),
)


def render_scene(scene, draw_objects=True) -> Image.Image:
    g = scene.grid
    img = Image.new("RGB", (g.width * SCALE, g.height * SCALE), COLOR_FREE)
    d = ImageDraw.Draw(img)
    for y in range(g.height):
        for x in range(g.width):
            s = g.state((x, y))
            if s == OBSTACLE:
                color = COLOR_OBSTACLE
            elif s == FREE:
                continue
            else:
                color = COLOR_UNKNOWN
            d.rectangle([x * SCALE, y * SCALE, (x + 1) * SCALE - 1, (y + 1) * SCALE - 1],
                        fill=color)
    if draw_objects:
        for o in sorted(scene.objects, key=lambda o: o.id):
            color = COLOR_PICKABLE if o.pickable else COLOR_OBJECT
            for (x, y) in sorted(o.footprint):
                d.rectangle([x * SCALE + 1, y * SCALE + 1,
                             (x + 1) * SCALE - 2, (y + 1) * SCALE - 2], fill=color)
    return img


def render_log(lines, scene, out_path) -> None:
    """Occupancy grid, object markers, and one polyline per agent."""
    header = loglib.log_header(lines)
    if header["scene_id"] != scene.id:
        raise ValueError(
            f"log scene {header['scene_id']!r} does not match {scene.id!r}"
        )
    img = render_scene(scene)
    d = ImageDraw.Draw(img)
    res = scene.resolution

    trails: dict = {}
    for aid, (x, y, _h) in sorted(header.get("spawns", {}).items()):
        trails[aid] = [(x, y)]
    for rec in lines[1:-1]:
        if rec.get("type") != "step":
            continue
        x, y, _h = rec["pose"]
        trails.setdefault(rec["agent"], []).append((x, y))

    for i, aid in enumerate(sorted(trails)):
        color = AGENT_COLORS[i % len(AGENT_COLORS)]
        pts = [(px / res * SCALE, py / res * SCALE) for (px, py) in trails[aid]]
        if len(pts) > 1:
            d.line(pts, fill=color, width=2)
        sx, sy = pts[0]
        d.ellipse([sx - 3, sy - 3, sx + 3, sy + 3], outline=color, width=2)
        ex, ey = pts[-1]
        d.ellipse([ex - 3, ey - 3, ex + 3, ey + 3], fill=color)

    img.save(out_path, format="PNG")
