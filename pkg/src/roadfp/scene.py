"""Synthetic track world: geometry, vehicle kinematics, and camera renderer.

Conventions used throughout:

* World ground plane is z=0, z up, units in meters.
* Vehicle heading is measured CLOCKWISE from the +x axis, so the forward
  unit vector is (cos h, -sin h). This makes a positive steering rotation
  turn the vehicle toward positive image x (rightward), which keeps all
  controller gains positive.
* Track segment geometry and overlay yaw use standard atan2 orientation;
  `heading_from_dir` converts a direction vector to a vehicle heading.

Everything here is a pure function over value types (no shared mutable
state), so rendering and labeling are safe to call from any thread.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels

IMAGE_W = 640
IMAGE_H = 480

SPEED_MAX = 2.0        # m/s, platform cap
OFF_TRACK_MARGIN = 0.5  # m beyond the lane edge before a frame is flagged

# render palette (R, G, B)
COLOR_SURFACE = (60, 60, 65)
COLOR_MARKING = (235, 235, 235)
COLOR_BACKGROUND = (74, 108, 70)
COLOR_SKY = (158, 173, 189)
COLOR_OBSTACLE = (35, 30, 30)
COLOR_MARKER = (240, 150, 40)


def heading_from_dir(dx: float, dy: float) -> float:
    """Vehicle heading (clockwise-positive) that faces along (dx, dy)."""
    return math.atan2(-dy, dx)


def heading_forward(heading: float) -> tuple[float, float]:
    return math.cos(heading), -math.sin(heading)


@dataclass(frozen=True)
class VehicleState:
    x: float
    y: float
    heading: float  # radians, clockwise from +x
    speed: float    # m/s, always in [0, SPEED_MAX]


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera rigidly mounted above the vehicle origin."""

    width: int = IMAGE_W
    height: int = IMAGE_H
    hfov_deg: float = 80.0
    mount_height: float = 0.30
    pitch_deg: float = 10.0       # downward tilt
    noise_std: float = 0.0        # per-pixel Gaussian sensor noise, 8-bit units
    max_render_dist: float = 60.0

    def __post_init__(self):
        if (self.width, self.height) != (IMAGE_W, IMAGE_H):
            raise ValueError("image size is fixed at 640x480")
        if not 20.0 < self.hfov_deg < 120.0:
            raise ValueError("horizontal FOV must be in (20, 120) degrees")

    @property
    def fx(self) -> float:
        return (self.width / 2.0) / math.tan(math.radians(self.hfov_deg) / 2.0)

    @property
    def fy(self) -> float:
        return self.fx


@dataclass(frozen=True)
class PhantomOverlay:
    """Fake visual feature painted on the road plane before projection.

    yaw is standard atan2 orientation of the overlay's local +x axis.
    With active=False or intensity=0 rendering is byte-identical to a
    render without the overlay.
    """

    pattern: str              # lane_lines | obstacle | marker
    x: float
    y: float
    yaw: float = 0.0
    intensity: float = 1.0
    active: bool = True
    length: float = 4.0       # lane_lines stripe length
    gap: float = 0.5          # lane_lines separation between stripe centers
    stripe_width: float = 0.08
    box_length: float = 0.5   # obstacle
    box_width: float = 0.4
    radius: float = 0.25      # marker

    def __post_init__(self):
        if self.pattern not in ("lane_lines", "obstacle", "marker"):
            raise ValueError(f"unknown overlay pattern: {self.pattern}")
        if not 0.0 <= self.intensity <= 1.0:
            raise ValueError("intensity must be in [0, 1]")


@dataclass(frozen=True)
class RenderedFrame:
    pixels: np.ndarray        # (480, 640, 3) uint8
    frame_id: int
    t_sim: float
    t_wall: float | None = None
    off_track: bool = False


class TrackSpec:
    """Piecewise line/arc centerline with lane and marking styling."""

    def __init__(self, segs: np.ndarray, total_length: float, closed: bool,
                 lane_width: float = 0.6, marking_style: str = "solid",
                 marking_width: float = 0.05, dash_period: float = 0.5,
                 dash_fill: float = 0.6,
                 surface_color=COLOR_SURFACE, marking_color=COLOR_MARKING,
                 background_color=COLOR_BACKGROUND):
        if lane_width <= 0:
            raise ValueError("lane_width must be positive")
        if marking_style not in ("solid", "dashed"):
            raise ValueError("marking_style must be 'solid' or 'dashed'")
        self.segs = np.ascontiguousarray(segs, dtype=np.float64)
        self.total_length = float(total_length)
        self.closed = bool(closed)
        self.lane_width = float(lane_width)
        self.marking_style = marking_style
        self.marking_width = float(marking_width)
        self.dash_period = float(dash_period)
        self.dash_fill = float(dash_fill)
        self.surface_color = tuple(surface_color)
        self.marking_color = tuple(marking_color)
        self.background_color = tuple(background_color)

    # -- construction ----------------------------------------------------

    @staticmethod
    def build(pieces, start=(0.0, 0.0), direction=(1.0, 0.0), closed=False,
              **style) -> "TrackSpec":
        """Build a track from piece dicts.

        Pieces: {kind: straight, length: L} or
                {kind: arc, radius: R, turn_deg: A} with positive A a left
                turn (min radius 0.5 m keeps the apex inside the frustum).
        """
        px, py = float(start[0]), float(start[1])
        dx, dy = float(direction[0]), float(direction[1])
        norm = math.hypot(dx, dy)
        dx, dy = dx / norm, dy / norm
        rows = []
        s = 0.0
        for piece in pieces:
            kind = piece["kind"]
            if kind == "straight":
                length = float(piece["length"])
                if length <= 0:
                    raise ValueError("straight length must be positive")
                rows.append([kernels.pyref.SEG_LINE, px, py, dx, dy,
                             length, s, 0.0])
                px += dx * length
                py += dy * length
                s += length
            elif kind == "arc":
                radius = float(piece["radius"])
                turn = math.radians(float(piece["turn_deg"]))
                if radius < 0.5:
                    raise ValueError("arc radius must be >= 0.5 m")
                if turn == 0.0:
                    raise ValueError("arc turn_deg must be nonzero")
                if turn > 0:   # left turn, CCW sweep
                    cx, cy = px - dy * radius, py + dx * radius
                else:          # right turn, CW sweep
                    cx, cy = px + dy * radius, py - dx * radius
                a0 = math.atan2(py - cy, px - cx)
                rows.append([kernels.pyref.SEG_ARC, cx, cy, radius,
                             a0, turn, s, 0.0])
                a1 = a0 + turn
                px = cx + radius * math.cos(a1)
                py = cy + radius * math.sin(a1)
                c, sn = math.cos(turn), math.sin(turn)
                dx, dy = dx * c - dy * sn, dx * sn + dy * c
                s += radius * abs(turn)
            else:
                raise ValueError(f"unknown track piece kind: {kind}")
        return TrackSpec(np.array(rows, dtype=np.float64), s, closed, **style)

    @staticmethod
    def straight(length: float = 30.0, **style) -> "TrackSpec":
        return TrackSpec.build([{"kind": "straight", "length": length}],
                               **style)

    @staticmethod
    def standard_loop(**style) -> "TrackSpec":
        """Stadium loop: two 4 m straights joined by 1.5 m-radius U-turns."""
        pieces = [
            {"kind": "straight", "length": 4.0},
            {"kind": "arc", "radius": 1.5, "turn_deg": 180.0},
            {"kind": "straight", "length": 4.0},
            {"kind": "arc", "radius": 1.5, "turn_deg": 180.0},
        ]
        return TrackSpec.build(pieces, closed=True, **style)

    @staticmethod
    def from_config(cfg: dict) -> "TrackSpec":
        cfg = dict(cfg)
        shape = cfg.pop("shape", None)
        style_keys = ("lane_width", "marking_style", "marking_width",
                      "dash_period", "dash_fill")
        style = {k: cfg.pop(k) for k in style_keys if k in cfg}
        if shape == "loop":
            extra = set(cfg)
        elif shape == "straight":
            style["length"] = cfg.pop("length", 30.0)
            extra = set(cfg)
        else:
            extra = set(cfg) - {"pieces", "start", "direction", "closed"}
        if extra:
            raise ValueError(f"unknown track config keys: {sorted(extra)}")
        if shape == "loop":
            return TrackSpec.standard_loop(**style)
        if shape == "straight":
            length = style.pop("length")
            return TrackSpec.straight(length, **style)
        return TrackSpec.build(cfg["pieces"], start=cfg.get("start", (0.0, 0.0)),
                               direction=cfg.get("direction", (1.0, 0.0)),
                               closed=cfg.get("closed", False), **style)

    # -- geometry queries ------------------------------------------------

    def distance(self, pts: np.ndarray):
        """Signed distance to and arclength along the nearest centerline."""
        return kernels.track_distance(
            np.ascontiguousarray(pts, dtype=np.float64), self.segs)

    def wrap_s(self, s: float) -> float:
        if self.closed:
            return s % self.total_length
        return min(max(s, 0.0), self.total_length)

    def point_at(self, s: float):
        """Centerline point and unit tangent at arclength s."""
        s = self.wrap_s(s)
        for row in self.segs:
            seg_len = (row[5] if row[0] == kernels.pyref.SEG_LINE
                       else row[3] * abs(row[5]))
            local = s - row[6]
            if local <= seg_len + 1e-9:
                local = max(local, 0.0)
                if row[0] == kernels.pyref.SEG_LINE:
                    px = row[1] + row[3] * local
                    py = row[2] + row[4] * local
                    return (px, py), (row[3], row[4])
                sgn = 1.0 if row[5] >= 0 else -1.0
                a = row[4] + sgn * local / row[3]
                px = row[1] + row[3] * math.cos(a)
                py = row[2] + row[3] * math.sin(a)
                return (px, py), (-sgn * math.sin(a), sgn * math.cos(a))
        (px, py), tan = self.point_at(self.total_length - 1e-9)
        return (px, py), tan

    def state_at(self, s: float, lateral: float = 0.0,
                 heading_error: float = 0.0, speed: float = 1.0) -> VehicleState:
        """Vehicle state at arclength s, offset `lateral` to the left of travel."""
        (px, py), (tx, ty) = self.point_at(s)
        nx, ny = -ty, tx  # left normal in standard orientation
        h = heading_from_dir(tx, ty) + heading_error
        return VehicleState(px + nx * lateral, py + ny * lateral, h,
                            min(max(speed, 0.0), SPEED_MAX))


def step_vehicle(state: VehicleState, rotation: float, speed_cmd: float,
                 dt: float, steering_gain: float = 6.0) -> VehicleState:
    """Forward-Euler unicycle step.

    Position advances along the current heading at the (clipped) commanded
    speed, then heading integrates steering_gain * rotation * dt. Positive
    rotation steers right (toward positive image x).
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    speed = min(max(speed_cmd, 0.0), SPEED_MAX)
    fx, fy = heading_forward(state.heading)
    return VehicleState(
        x=state.x + fx * speed * dt,
        y=state.y + fy * speed * dt,
        heading=state.heading + steering_gain * rotation * dt,
        speed=speed,
    )


@dataclass(frozen=True)
class ApexLabel:
    x: float
    y: float
    in_view: bool


def _camera_basis(vehicle: VehicleState, camera: CameraModel):
    alpha = math.radians(camera.pitch_deg)
    ch, sh = math.cos(vehicle.heading), math.sin(vehicle.heading)
    ca, sa = math.cos(alpha), math.sin(alpha)
    fwd = np.array([ch * ca, -sh * ca, -sa])
    right = np.array([-sh, -ch, 0.0])
    down = np.cross(fwd, right)
    pos = np.array([vehicle.x, vehicle.y, camera.mount_height])
    return pos, fwd, right, down


def ground_truth_apex(track: TrackSpec, vehicle: VehicleState,
                      camera: CameraModel,
                      lookahead: float = 1.0) -> ApexLabel:
    """Project the centerline point `lookahead` meters ahead into ROI coords.

    x, y are normalized to [-1, 1] over the bottom-half region of interest;
    out-of-frustum results are clamped and flagged.
    """
    d, s = track.distance(np.array([[vehicle.x, vehicle.y]]))
    (ax, ay), _ = track.point_at(float(s[0]) + lookahead)
    pos, fwd, right, down = _camera_basis(vehicle, camera)
    rel = np.array([ax, ay, 0.0]) - pos
    z = float(rel @ fwd)
    in_view = z > 1e-6
    if not in_view:
        z = 1e-6
    u = camera.width / 2.0 + camera.fx * float(rel @ right) / z
    v = camera.height / 2.0 + camera.fy * float(rel @ down) / z
    nx = (u - camera.width / 2.0) / (camera.width / 2.0)
    ny = (v - 3.0 * camera.height / 4.0) / (camera.height / 4.0)
    in_view = bool(in_view and -1.0 <= nx <= 1.0 and -1.0 <= ny <= 1.0)
    return ApexLabel(min(max(nx, -1.0), 1.0), min(max(ny, -1.0), 1.0), in_view)


def _overlay_masks(overlay: PhantomOverlay, wx, wy):
    """Boolean mask + color for an overlay over world-coordinate arrays."""
    c, s = math.cos(overlay.yaw), math.sin(overlay.yaw)
    lx = (wx - overlay.x) * c + (wy - overlay.y) * s
    ly = -(wx - overlay.x) * s + (wy - overlay.y) * c
    if overlay.pattern == "lane_lines":
        along = (lx >= 0.0) & (lx <= overlay.length)
        half = overlay.stripe_width / 2.0
        stripes = (np.abs(ly - overlay.gap / 2.0) <= half) | \
                  (np.abs(ly + overlay.gap / 2.0) <= half)
        return along & stripes, COLOR_MARKING
    if overlay.pattern == "obstacle":
        mask = (np.abs(lx - overlay.box_length / 2.0) <= overlay.box_length / 2.0) & \
               (np.abs(ly) <= overlay.box_width / 2.0)
        return mask, COLOR_OBSTACLE
    mask = (lx * lx + ly * ly) <= overlay.radius ** 2
    return mask, COLOR_MARKER


def render_frame(track: TrackSpec, vehicle: VehicleState, camera: CameraModel,
                 overlays=(), seed: int = 0, frame_id: int = 0,
                 t_sim: float = 0.0, t_wall: float | None = None) -> RenderedFrame:
    """Rasterize the flat-ground world through the pinhole camera.

    Deterministic: identical inputs and seed give byte-identical pixels.
    Active overlays are composited on the road plane (in world coordinates)
    before projection, so they behave like features physically present in
    the scene. A vehicle far off the track is reported via the off_track
    flag rather than an exception; the loop must keep running.
    """
    w, h = camera.width, camera.height
    pos, fwd, right, down = _camera_basis(vehicle, camera)

    au = (np.arange(w, dtype=np.float64) + 0.5 - w / 2.0) / camera.fx
    bv = (np.arange(h, dtype=np.float64) + 0.5 - h / 2.0) / camera.fy

    # right has no z component, so the ray z depends only on the row
    ray_z = fwd[2] + bv * down[2]
    ground_rows = ray_z < -1e-9
    t_row = np.where(ground_rows, camera.mount_height / np.maximum(-ray_z, 1e-12),
                     np.inf)

    img = np.empty((h, w, 3), dtype=np.uint8)
    img[:] = COLOR_SKY

    rows = np.nonzero(ground_rows)[0]
    if rows.size:
        t = t_row[rows][:, None]
        wx = pos[0] + t * (fwd[0] + bv[rows][:, None] * down[0]) \
            + t * au[None, :] * right[0]
        wy = pos[1] + t * (fwd[1] + bv[rows][:, None] * down[1]) \
            + t * au[None, :] * right[1]
        visible = t[:, 0] <= camera.max_render_dist

        block = np.empty((rows.size, w, 3), dtype=np.uint8)
        block[:] = COLOR_BACKGROUND

        vis_idx = np.nonzero(visible)[0]
        if vis_idx.size:
            pts = np.stack([wx[vis_idx].ravel(), wy[vis_idx].ravel()], axis=1)
            dist, arclen = track.distance(pts)
            dist = np.abs(dist).reshape(vis_idx.size, w)
            arclen = arclen.reshape(vis_idx.size, w)

            half_lane = track.lane_width / 2.0
            on_road = dist <= half_lane + track.marking_width
            marking = np.abs(dist - half_lane) <= track.marking_width / 2.0
            if track.marking_style == "dashed":
                painted = np.mod(arclen, track.dash_period) \
                    < track.dash_fill * track.dash_period
                marking &= painted

            sub = block[vis_idx]
            sub[on_road] = track.surface_color
            sub[marking] = track.marking_color

            for overlay in overlays:
                if not overlay.active or overlay.intensity <= 0.0:
                    continue
                mask, color = _overlay_masks(overlay, wx[vis_idx], wy[vis_idx])
                mask &= dist <= half_lane + OFF_TRACK_MARGIN
                if not mask.any():
                    continue
                blended = (sub[mask].astype(np.float64) * (1.0 - overlay.intensity)
                           + np.array(color, dtype=np.float64) * overlay.intensity)
                sub[mask] = np.clip(np.rint(blended), 0, 255).astype(np.uint8)
            block[vis_idx] = sub

        img[rows] = block

    if camera.noise_std > 0.0:
        rng = np.random.default_rng(seed)
        noisy = img.astype(np.float64) + rng.normal(0.0, camera.noise_std,
                                                    size=img.shape)
        img = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)

    d_vehicle, _ = track.distance(np.array([[vehicle.x, vehicle.y]]))
    off = abs(float(d_vehicle[0])) > track.lane_width / 2.0 + OFF_TRACK_MARGIN
    return RenderedFrame(pixels=img, frame_id=frame_id, t_sim=t_sim,
                         t_wall=t_wall, off_track=off)


def save_png(frame_or_pixels, path) -> None:
    from PIL import Image

    pixels = getattr(frame_or_pixels, "pixels", frame_or_pixels)
    Image.fromarray(pixels, mode="RGB").save(path, format="PNG")


def load_png(path) -> np.ndarray:
    from PIL import Image

    with Image.open(path) as im:
        arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
    return arr
