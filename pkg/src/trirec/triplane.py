"""Triplane field: cross-attention decoder, sampling, and the renderer.

The field lives on three axis-aligned feature planes over [-1, 1]^3 with
grid nodes at the cube faces (align-corners convention). A point's feature
is the sum (or concatenation) of bilinear samples from the XY, XZ and YZ
planes; a small MLP decodes features to density and color. Rendering is
stratified ray marching with alpha compositing, differentiable end to end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .scenekit.camera import CameraPose, ray_directions
from .scenekit.render import SCENE_RADIUS

PLANE_ORDER = ("xy", "xz", "yz")
_PLANE_AXES = ((0, 1), (0, 2), (1, 2))

BACKGROUND_RGB = (1.0, 1.0, 1.0)
DEPTH_SENTINEL = 0.0
MASK_THRESHOLD = 0.5


@dataclass
class Triplane:
    """Three feature planes (3, R, R, d), ordered XY, XZ, YZ, row-major."""

    planes: torch.Tensor

    def __post_init__(self):
        if self.planes.ndim != 4 or self.planes.shape[0] != 3 \
                or self.planes.shape[1] != self.planes.shape[2]:
            raise ValueError("planes must have shape (3, R, R, d)")

    @property
    def resolution(self) -> int:
        return self.planes.shape[1]

    @property
    def dim(self) -> int:
        return self.planes.shape[3]


def sample_triplane(tp: Triplane, points: torch.Tensor,
                    combine: str = "sum") -> torch.Tensor:
    """Bilinear triplane features for points (..., 3), clamped to the cube.

    A point exactly on a grid node returns the sum of the three plane
    entries at that node; grid nodes span [-1, 1] inclusive.
    """
    r = tp.resolution
    flat = points.reshape(-1, 3).clamp(-1.0, 1.0)
    coords = (flat + 1.0) * 0.5 * (r - 1)  # continuous node coordinates
    feats = []
    for plane_idx, (au, av) in enumerate(_PLANE_AXES):
        u = coords[:, au]
        v = coords[:, av]
        u0 = u.floor().clamp(0, r - 2)
        v0 = v.floor().clamp(0, r - 2)
        fu = (u - u0).unsqueeze(-1)
        fv = (v - v0).unsqueeze(-1)
        u0 = u0.long()
        v0 = v0.long()
        grid = tp.planes[plane_idx].reshape(r * r, -1)
        f00 = grid[u0 * r + v0]
        f01 = grid[u0 * r + v0 + 1]
        f10 = grid[(u0 + 1) * r + v0]
        f11 = grid[(u0 + 1) * r + v0 + 1]
        top = f00 * (1 - fv) + f01 * fv
        bot = f10 * (1 - fv) + f11 * fv
        feats.append(top * (1 - fu) + bot * fu)
    if combine == "sum":
        out = feats[0] + feats[1] + feats[2]
    elif combine == "concat":
        out = torch.cat(feats, dim=-1)
    else:
        raise ValueError(f"unknown combine rule {combine!r}")
    return out.reshape(*points.shape[:-1], out.shape[-1])


class FieldMLP(nn.Module):
    """Feature -> (density, rgb); softplus keeps density non-negative."""

    def __init__(self, in_dim: int, hidden: int | None = None):
        super().__init__()
        hidden = in_dim if hidden is None else hidden
        self.net = nn.Sequential(
            nn.Linear(in_dim, hidden), nn.SiLU(),
            nn.Linear(hidden, hidden), nn.SiLU(),
            nn.Linear(hidden, 4),
        )

    def forward(self, feats: torch.Tensor):
        raw = self.net(feats)
        density = torch.nn.functional.softplus(raw[..., 0])
        rgb = torch.sigmoid(raw[..., 1:4])
        return density, rgb


class CrossBlock(nn.Module):
    """Decoder block: cross-attention to view tokens, self-attention, MLP."""

    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.norm_q = nn.LayerNorm(dim)
        self.norm_ctx = nn.LayerNorm(dim)
        self.to_q = nn.Linear(dim, dim)
        self.to_kv = nn.Linear(dim, 2 * dim)
        self.cross_proj = nn.Linear(dim, dim)
        self.norm_self = nn.LayerNorm(dim)
        self.self_qkv = nn.Linear(dim, 3 * dim)
        self.self_proj = nn.Linear(dim, dim)
        self.norm_mlp = nn.LayerNorm(dim)
        self.mlp = nn.Sequential(nn.Linear(dim, 4 * dim), nn.GELU(),
                                 nn.Linear(4 * dim, dim))

    def _heads(self, x: torch.Tensor) -> torch.Tensor:
        return x.reshape(x.shape[0], self.heads, self.head_dim).transpose(0, 1)

    def _attend(self, q, k, v, n_q, dim):
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        out = torch.softmax(scores, dim=-1) @ v
        return out.transpose(0, 1).reshape(n_q, dim)

    def forward(self, x: torch.Tensor, ctx: torch.Tensor) -> torch.Tensor:
        n, d = x.shape
        q = self._heads(self.to_q(self.norm_q(x)))
        kv = self.to_kv(self.norm_ctx(ctx))
        k, v = kv[:, :d], kv[:, d:]
        x = x + self.cross_proj(self._attend(q, self._heads(k),
                                             self._heads(v), n, d))
        qkv = self.self_qkv(self.norm_self(x))
        q2, k2, v2 = qkv[:, :d], qkv[:, d:2 * d], qkv[:, 2 * d:]
        x = x + self.self_proj(self._attend(self._heads(q2), self._heads(k2),
                                            self._heads(v2), n, d))
        return x + self.mlp(self.norm_mlp(x))


class TriplaneDecoder(nn.Module):
    """Learnable triplane queries cross-attending to concatenated view tokens."""

    def __init__(self, plane_resolution: int, dim: int, depth: int = 2,
                 heads: int = 4):
        super().__init__()
        self.plane_resolution = plane_resolution
        self.dim = dim
        self.queries = nn.Parameter(
            torch.zeros(3 * plane_resolution * plane_resolution, dim))
        self.blocks = nn.ModuleList(CrossBlock(dim, heads)
                                    for _ in range(depth))
        self.norm = nn.LayerNorm(dim)

    def forward(self, view_tokens: list[torch.Tensor]) -> Triplane:
        if not view_tokens:
            raise ValueError("need at least one view")
        if any(t.shape[-1] != self.dim for t in view_tokens):
            raise ValueError("token width does not match the decoder")
        ctx = torch.cat(view_tokens, dim=0)
        x = self.queries
        for block in self.blocks:
            x = block(x, ctx)
        x = self.norm(x)
        r = self.plane_resolution
        return Triplane(x.reshape(3, r, r, self.dim))


def init_decoder(decoder: TriplaneDecoder, generator: torch.Generator,
                 std: float = 0.02) -> TriplaneDecoder:
    for name, p in decoder.named_parameters():
        if p.ndim == 1:
            if name.endswith("norm.weight") or ".norm" in name and name.endswith("weight"):
                p.data.fill_(1.0)
            else:
                p.data.zero_()
        else:
            p.data.normal_(0.0, std, generator=generator)
    return decoder


def init_field(field: FieldMLP, generator: torch.Generator,
               std: float = 0.02) -> FieldMLP:
    for p in field.parameters():
        if p.ndim == 1:
            p.data.zero_()
        else:
            p.data.normal_(0.0, std, generator=generator)
    return field


@dataclass
class RenderedView:
    """Differentiable render of a triplane under one camera."""

    rgb: torch.Tensor            # (H, W, 3)
    depth: torch.Tensor          # (H, W), sentinel 0 where soft mask <= 0.5
    normal: torch.Tensor         # (H, W, 3) camera space, 0 on background
    soft_mask: torch.Tensor      # (H, W) accumulated compositing weight
    mask: torch.Tensor           # (H, W) hard mask (soft > 0.5)
    residual_transmittance: torch.Tensor  # (H, W)
    camera: CameraPose


def render_view(tp: Triplane, camera: CameraPose, resolution: int,
                samples_per_ray: int, field: FieldMLP,
                combine: str = "sum",
                background=BACKGROUND_RGB,
                jitter: torch.Generator | None = None,
                normal_step: float | None = None,
                field_override=None) -> RenderedView:
    """Volume-render the field along stratified per-pixel rays.

    ``field_override`` bypasses triplane sampling entirely: a callable from
    world points (..., 3) to (density, rgb), used by oracle tests.
    """
    if samples_per_ray < 8:
        raise ValueError("samples_per_ray must be at least 8")
    dtype = tp.planes.dtype
    h = w = int(resolution)

    def evaluate(points):
        if field_override is not None:
            return field_override(points)
        return field(sample_triplane(tp, points, combine))

    dirs = torch.from_numpy(
        ray_directions(camera, resolution).reshape(-1, 3)).to(dtype)
    origin = torch.from_numpy(camera.position).to(dtype)
    dist = float(np.linalg.norm(camera.position))
    t_near = max(dist - SCENE_RADIUS, 1e-3)
    t_far = dist + SCENE_RADIUS
    step = (t_far - t_near) / samples_per_ray

    offsets = torch.arange(samples_per_ray, dtype=dtype)
    if jitter is None:
        offsets = offsets + 0.5
    else:
        offsets = offsets + torch.rand(samples_per_ray, generator=jitter,
                                       dtype=dtype)
    tvals = t_near + offsets * step  # (S,) shared across rays

    points = origin + tvals[None, :, None] * dirs[:, None, :]  # (HW, S, 3)
    density, color = evaluate(points)
    if not torch.isfinite(density).all():
        raise FloatingPointError("non-finite densities during rendering")

    alpha = 1.0 - torch.exp(-density * step)          # (HW, S)
    trans = torch.cumprod(1.0 - alpha + 0.0, dim=-1)
    trans = torch.cat([torch.ones_like(trans[:, :1]), trans[:, :-1]], dim=-1)
    weights = trans * alpha
    acc = weights.sum(dim=-1)                          # (HW,)
    resid = trans[:, -1] * (1.0 - alpha[:, -1])

    bg = torch.tensor(background, dtype=dtype)
    rgb = (weights.unsqueeze(-1) * color).sum(dim=-2) + (1 - acc)[:, None] * bg
    exp_depth = (weights * tvals[None, :]).sum(dim=-1) / acc.clamp(min=1e-6)
    fg = acc > MASK_THRESHOLD
    depth = torch.where(fg, exp_depth, torch.zeros_like(exp_depth))

    # Density-gradient normals at the expected-depth point, all rays, masked
    # afterwards; keeps the op count independent of scene content.
    hstep = (2.0 / tp.resolution) if normal_step is None else normal_step
    surf = origin + exp_depth.detach().unsqueeze(-1) * dirs
    grads = []
    for axis in range(3):
        off = torch.zeros(3, dtype=dtype)
        off[axis] = hstep
        d_plus, _ = evaluate(surf + off)
        d_minus, _ = evaluate(surf - off)
        grads.append((d_plus - d_minus) / (2.0 * hstep))
    grad = torch.stack(grads, dim=-1)
    n_world = -grad / grad.norm(dim=-1, keepdim=True).clamp(min=1e-12)
    rot = torch.from_numpy(camera.rotation).to(dtype)
    n_cam = n_world @ rot.T
    normal = torch.where(fg.unsqueeze(-1), n_cam, torch.zeros_like(n_cam))

    return RenderedView(
        rgb=rgb.reshape(h, w, 3),
        depth=depth.reshape(h, w),
        normal=normal.reshape(h, w, 3),
        soft_mask=acc.reshape(h, w),
        mask=fg.reshape(h, w).to(dtype),
        residual_transmittance=resid.reshape(h, w),
        camera=camera,
    )


def density_grid(tp: Triplane, field: FieldMLP, n: int,
                 combine: str = "sum") -> torch.Tensor:
    """Densities on an n^3 lattice spanning the cube (nodes at the faces)."""
    dtype = tp.planes.dtype
    axis = torch.linspace(-1.0, 1.0, n, dtype=dtype)
    gx, gy, gz = torch.meshgrid(axis, axis, axis, indexing="ij")
    pts = torch.stack([gx, gy, gz], dim=-1).reshape(-1, 3)
    density, _ = field(sample_triplane(tp, pts, combine))
    return density.reshape(n, n, n)


def export_mesh(tp: Triplane, field: FieldMLP, path, level: float = 1.0,
                grid: int = 64, combine: str = "sum") -> int:
    """Marching-cubes the density field and write an ASCII OBJ.

    Returns the number of vertices written. Not differentiable; inspection
    only.
    """
    from skimage import measure

    with torch.no_grad():
        dens = density_grid(tp, field, grid, combine).numpy()
    verts, faces, _, _ = measure.marching_cubes(dens, level=level)
    scale = 2.0 / (grid - 1)
    verts = verts * scale - 1.0
    with open(path, "w") as f:
        for v in verts:
            f.write(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}\n")
        for tri in faces:
            f.write(f"f {tri[0] + 1} {tri[1] + 1} {tri[2] + 1}\n")
    return len(verts)
