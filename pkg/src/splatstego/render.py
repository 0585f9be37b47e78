"""CPU reference splatting renderer.

Projects every Gaussian with the EWA approximation, sorts all of them by
camera depth and alpha-composites front to back, pixel-exact with the
conventions of the original tile rasterizer (0.3 px low-pass, alpha cut at
1/255, alpha clamp at 0.99, termination below 1e-4 transmittance).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scene import GaussianScene, activate

SH_C0 = 0.28209479177387814
SH_C1 = 0.4886025119029199
SH_C2 = (1.0925484305920792, -1.0925484305920792, 0.31539156525252005, -1.0925484305920792, 0.5462742152960396)
SH_C3 = (
    -0.5900435899266435,
    2.890611442640554,
    -0.4570457994644658,
    0.3731763325901154,
    -0.4570457994644658,
    1.445305721320277,
    -0.5900435899266435,
)

LOW_PASS = 0.3
ALPHA_MIN = 1.0 / 255.0
ALPHA_MAX = 0.99
T_MIN = 1e-4


@dataclass(frozen=True)
class Camera:
    rotation: np.ndarray  # world -> camera
    translation: np.ndarray
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        object.__setattr__(self, "rotation", np.asarray(self.rotation, dtype=np.float64).reshape(3, 3))
        object.__setattr__(self, "translation", np.asarray(self.translation, dtype=np.float64).reshape(3))
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if self.width < 1 or self.height < 1:
            raise ValueError("image size must be at least 1x1")

    @property
    def center(self) -> np.ndarray:
        return -self.rotation.T @ self.translation

    @classmethod
    def look_at(cls, eye, target=(0.0, 0.0, 0.0), up=(0.0, -1.0, 0.0), width=256, height=256, fov_deg=50.0):
        """Pinhole camera at ``eye``; camera axes are x right, y down, z forward."""
        eye, target, up = (np.asarray(v, dtype=np.float64) for v in (eye, target, up))
        z = target - eye
        z /= np.linalg.norm(z)
        x = np.cross(-up, z)
        x /= np.linalg.norm(x)
        y = np.cross(z, x)
        rot = np.stack([x, y, z])
        focal = 0.5 * width / np.tan(np.radians(fov_deg) / 2)
        return cls(rot, -rot @ eye, focal, focal, width / 2, height / 2, width, height)

    @classmethod
    def default(cls, width=256, height=256) -> "Camera":
        """Three-quarter view of the unit cube centred at the origin."""
        return cls.look_at((1.2, -0.9, -1.8), width=width, height=height)

    def to_text(self) -> str:
        fmt = lambda vals: " ".join(repr(float(v)) for v in vals)
        return (
            f"rotation {fmt(self.rotation.ravel())}\n"
            f"translation {fmt(self.translation)}\n"
            f"fx {float(self.fx)!r}\nfy {float(self.fy)!r}\ncx {float(self.cx)!r}\ncy {float(self.cy)!r}\n"
            f"width {self.width}\nheight {self.height}\n"
        )

    @classmethod
    def from_text(cls, text: str) -> "Camera":
        fields = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, *vals = line.split()
            fields[key] = vals
        sizes = {"rotation": 9, "translation": 3, "fx": 1, "fy": 1, "cx": 1, "cy": 1, "width": 1, "height": 1}
        for key, size in sizes.items():
            if key not in fields:
                raise ValueError(f"camera file is missing '{key}'")
            if len(fields[key]) != size:
                raise ValueError(f"camera field '{key}' needs {size} values, got {len(fields[key])}")
        num = lambda key: [float(v) for v in fields[key]]
        return cls(
            rotation=num("rotation"),
            translation=num("translation"),
            fx=num("fx")[0],
            fy=num("fy")[0],
            cx=num("cx")[0],
            cy=num("cy")[0],
            width=int(fields["width"][0]),
            height=int(fields["height"][0]),
        )


def _normalize(v, what):
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(norm == 0):
        raise ValueError(f"zero-length {what}")
    return v / norm


def quat_to_rotation(q) -> np.ndarray:
    """Rotation matrices for (w, x, y, z) quaternions; input shape (..., 4)."""
    q = _normalize(q, "quaternion")
    w, x, y, z = np.moveaxis(q, -1, 0)
    return np.stack(
        [
            np.stack([1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)], -1),
            np.stack([2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)], -1),
            np.stack([2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)], -1),
        ],
        -2,
    )


def covariance3d(rotation, scale) -> np.ndarray:
    """R S S^T R^T for quaternion(s) ``rotation`` and activated ``scale``."""
    r = quat_to_rotation(rotation)
    m = r * np.asarray(scale, dtype=np.float64)[..., None, :]
    return m @ np.swapaxes(m, -1, -2)


def project_covariance(sigma, cam: Camera, mean_cam) -> np.ndarray:
    """Screen-space 2x2 covariance J W Sigma W^T J^T plus the low-pass floor.

    Accepts a single (3, 3) covariance with a 3-vector mean or stacks of both.
    """
    mean_cam = np.asarray(mean_cam, dtype=np.float64)
    tx, ty, tz = np.moveaxis(mean_cam, -1, 0)
    if np.any(tz <= 0):
        raise ValueError("cannot project a Gaussian at non-positive depth")
    zeros = np.zeros_like(tz)
    jac = np.stack(
        [
            np.stack([cam.fx / tz, zeros, -cam.fx * tx / tz**2], -1),
            np.stack([zeros, cam.fy / tz, -cam.fy * ty / tz**2], -1),
        ],
        -2,
    )
    t = jac @ cam.rotation
    cov = t @ np.asarray(sigma, dtype=np.float64) @ np.swapaxes(t, -1, -2)
    return cov + LOW_PASS * np.eye(2)


def sh_basis(direction) -> np.ndarray:
    """The 16 real SH basis values (degree <= 3) in slot order, for (..., 3) directions."""
    d = _normalize(direction, "direction")
    x, y, z = np.moveaxis(d, -1, 0)
    xx, yy, zz = x * x, y * y, z * z
    return np.stack(
        [
            np.full_like(x, SH_C0),
            -SH_C1 * y,
            SH_C1 * z,
            -SH_C1 * x,
            SH_C2[0] * x * y,
            SH_C2[1] * y * z,
            SH_C2[2] * (2 * zz - xx - yy),
            SH_C2[3] * x * z,
            SH_C2[4] * (xx - yy),
            SH_C3[0] * y * (3 * xx - yy),
            SH_C3[1] * x * y * z,
            SH_C3[2] * y * (4 * zz - xx - yy),
            SH_C3[3] * z * (2 * zz - 3 * xx - 3 * yy),
            SH_C3[4] * x * (4 * zz - xx - yy),
            SH_C3[5] * z * (xx - yy),
            SH_C3[6] * x * (xx - 3 * yy),
        ],
        -1,
    )


def eval_color(sh, direction) -> np.ndarray:
    """RGB from (..., 16, 3) coefficients seen along (..., 3) directions."""
    basis = sh_basis(direction)
    rgb = np.einsum("...j,...jc->...c", basis, np.asarray(sh, dtype=np.float64)) + 0.5
    return np.maximum(rgb, 0.0)


@dataclass
class RenderStats:
    visible: int = 0
    culled_depth: int = 0
    singular: int = 0
    offscreen: int = 0
    splatted: int = 0
    weights: np.ndarray | None = field(default=None, repr=False)


def render(
    scene: GaussianScene,
    cam: Camera,
    background=(0.0, 0.0, 0.0),
    stats: RenderStats | None = None,
    clamp: bool = True,
) -> np.ndarray:
    """Render to a (height, width, 3) float64 image.

    Pixel (px, py) is sampled at (px + 0.5, py + 0.5). When ``stats`` is
    given it receives counters and the per-pixel accumulated weight.
    """
    stats = stats if stats is not None else RenderStats()
    bg = np.asarray(background, dtype=np.float64).reshape(3)
    h, w = cam.height, cam.width
    color = np.zeros((h, w, 3))
    trans = np.ones((h, w))
    alive = np.ones((h, w), dtype=bool)
    stats.weights = np.zeros((h, w))

    if scene.count:
        _splat_all(scene, cam, color, trans, alive, stats)

    image = color + trans[..., None] * bg
    return np.clip(image, 0.0, 1.0) if clamp else image


def _splat_all(scene, cam, color, trans, alive, stats):
    mean_cam = scene.positions.astype(np.float64) @ cam.rotation.T + cam.translation
    depth = mean_cam[:, 2]
    front = np.flatnonzero(depth > 0)
    stats.culled_depth = scene.count - len(front)
    if len(front) == 0:
        return

    opacity, scale = activate(scene)
    sigma3 = covariance3d(scene.rotations[front], scale[front])
    cov = project_covariance(sigma3, cam, mean_cam[front])
    a, b, c = cov[:, 0, 0], cov[:, 0, 1], cov[:, 1, 1]
    det = a * c - b * b
    ok = det > 0
    stats.singular = int(np.count_nonzero(~ok))
    inv_det = np.where(ok, 1.0 / np.where(ok, det, 1.0), 0.0)
    conic = np.stack([c * inv_det, -b * inv_det, a * inv_det], -1)

    mc = mean_cam[front]
    u = cam.fx * mc[:, 0] / mc[:, 2] + cam.cx
    v = cam.fy * mc[:, 1] / mc[:, 2] + cam.cy

    # Support radius where opacity * exp(-r^2 / (2 lambda_max)) drops under 1/255.
    op = opacity[front]
    lam = 0.5 * (a + c) + np.sqrt(np.maximum(0.25 * (a - c) ** 2 + b * b, 0.0))
    reach = np.log(np.maximum(op * 255.0, 1.0))
    radius = np.sqrt(2.0 * lam * reach)
    ok &= reach > 0

    dirs = scene.positions[front].astype(np.float64) - cam.center
    rgb = eval_color(scene.sh[front], dirs)

    h, w = trans.shape
    x0 = np.maximum(np.floor(u - radius - 0.5).astype(np.int64), 0)
    x1 = np.minimum(np.ceil(u + radius - 0.5).astype(np.int64) + 1, w)
    y0 = np.maximum(np.floor(v - radius - 0.5).astype(np.int64), 0)
    y1 = np.minimum(np.ceil(v + radius - 0.5).astype(np.int64) + 1, h)
    onscreen = (x0 < x1) & (y0 < y1)
    stats.offscreen = int(np.count_nonzero(ok & ~onscreen))
    ok &= onscreen
    stats.visible = int(np.count_nonzero(ok))

    order = np.lexsort((front, depth[front]))
    order = order[ok[order]]
    xs = np.arange(w) + 0.5
    ys = np.arange(h) + 0.5
    splatted = 0
    for i in order:
        sy, sx = slice(y0[i], y1[i]), slice(x0[i], x1[i])
        live = alive[sy, sx]
        if not live.any():
            continue
        dx = u[i] - xs[sx]
        dy = v[i] - ys[sy]
        ca, cb, cc = conic[i]
        power = -0.5 * (ca * dx[None, :] ** 2 + cc * dy[:, None] ** 2) - cb * dy[:, None] * dx[None, :]
        alpha = np.minimum(ALPHA_MAX, op[i] * np.exp(power))
        hit = live & (alpha >= ALPHA_MIN) & (power <= 0)
        if not hit.any():
            continue
        t = trans[sy, sx]
        alpha = np.where(hit, alpha, 0.0)
        t_next = t * (1.0 - alpha)
        done = hit & (t_next < T_MIN)
        take = hit & ~done
        weight = np.where(take, alpha * t, 0.0)
        color[sy, sx] += weight[..., None] * rgb[i]
        stats.weights[sy, sx] += weight
        trans[sy, sx] = np.where(take, t_next, t)
        alive[sy, sx] = live & ~done
        splatted += 1
    stats.splatted = splatted


def to_uint8(image) -> np.ndarray:
    return np.rint(np.clip(image, 0.0, 1.0) * 255.0).astype(np.uint8)


def encode_ppm(image) -> bytes:
    img = to_uint8(image)
    h, w = img.shape[:2]
    return f"P6\n{w} {h}\n255\n".encode("ascii") + img.tobytes()


def decode_ppm(data: bytes) -> np.ndarray:
    tokens = []
    pos = 0
    while len(tokens) < 4:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if data[pos : pos + 1] == b"#":
            pos = data.index(b"\n", pos) + 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        tokens.append(data[start:pos])
    if tokens[0] != b"P6" or int(tokens[3]) != 255:
        raise ValueError("only 8-bit binary PPM (P6) images are supported")
    w, h = int(tokens[1]), int(tokens[2])
    pos += 1
    body = np.frombuffer(data, dtype=np.uint8, count=w * h * 3, offset=pos)
    return body.reshape(h, w, 3).astype(np.float64) / 255.0
