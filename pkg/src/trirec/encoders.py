"""Micro vision transformers with camera-conditioned adaptive layer norm.

The semantic encoder consumes RGB views; the geometry encoder is the same
architecture with a 4-channel input (normal xyz + normalized depth) and can
be grafted from a trained semantic encoder so that, before any training,
it reproduces the semantic encoder on normal-as-RGB inputs exactly.

At initialization every modulation map is zero, so encoder outputs are
independent of the camera until training moves those weights.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import torch
import torch.nn as nn

from .scenekit.camera import COND_DIM, CameraPose


@dataclass(frozen=True)
class EncoderConfig:
    image_size: int = 32
    patch_size: int = 8
    in_channels: int = 3
    dim: int = 64
    depth: int = 4
    heads: int = 4
    cond_dim: int = COND_DIM

    def __post_init__(self):
        if self.image_size % self.patch_size:
            raise ValueError("image size must be divisible by the patch size")
        if self.dim % self.heads:
            raise ValueError("dim must be divisible by heads")

    @property
    def tokens(self) -> int:
        return (self.image_size // self.patch_size) ** 2


@dataclass
class TokenGrid:
    """Per-view token matrix (N, d) with its provenance."""

    tokens: torch.Tensor
    view_index: int = 0
    kind: str = "semantic"  # semantic | geometric | fused

    def __post_init__(self):
        if self.tokens.ndim != 2:
            raise ValueError("tokens must be a (N, d) matrix")
        if not torch.isfinite(self.tokens).all():
            raise ValueError("tokens contain non-finite entries")
        if self.kind not in ("semantic", "geometric", "fused"):
            raise ValueError(f"unknown token kind {self.kind!r}")


def patchify(image: torch.Tensor, patch_size: int) -> torch.Tensor:
    """(H, W, C) image -> (N, P*P*C) rows, patches and pixels row-major,
    channels fastest."""
    if image.ndim != 3 or image.shape[0] != image.shape[1]:
        raise ValueError("image must be square (H, W, C)")
    h = image.shape[0]
    if h % patch_size:
        raise ValueError("image size must be divisible by the patch size")
    g = h // patch_size
    c = image.shape[2]
    x = image.reshape(g, patch_size, g, patch_size, c)
    x = x.permute(0, 2, 1, 3, 4)  # (gy, gx, py, px, c)
    return x.reshape(g * g, patch_size * patch_size * c)


def unpatchify(rows: torch.Tensor, patch_size: int, channels: int) -> torch.Tensor:
    """Inverse of :func:`patchify` for square images."""
    n = rows.shape[0]
    g = int(math.isqrt(n))
    if g * g != n:
        raise ValueError("token count is not a perfect square")
    x = rows.reshape(g, g, patch_size, patch_size, channels)
    x = x.permute(0, 2, 1, 3, 4)
    return x.reshape(g * patch_size, g * patch_size, channels)


class PatchEmbed(nn.Module):
    """Linear patch embedding applied channel by channel.

    Summing per-channel matmuls (instead of one fused matmul) keeps the
    grafted geometry encoder exactly equal to its semantic source when the
    extra depth channel has zero weights.
    """

    def __init__(self, patch_size: int, in_channels: int, dim: int):
        super().__init__()
        self.patch_size = patch_size
        self.in_channels = in_channels
        self.weight = nn.Parameter(
            torch.empty(in_channels, patch_size * patch_size, dim))
        self.bias = nn.Parameter(torch.zeros(dim))

    def forward(self, patches: torch.Tensor) -> torch.Tensor:
        n = patches.shape[0]
        px = patches.reshape(n, -1, self.in_channels)
        out = px[:, :, 0] @ self.weight[0]
        for c in range(1, self.in_channels):
            out = out + px[:, :, c] @ self.weight[c]
        return out + self.bias


class Modulation(nn.Module):
    """Camera conditioning -> per-block scale/shift/gate, zero at init."""

    def __init__(self, cond_dim: int, dim: int):
        super().__init__()
        self.proj = nn.Linear(cond_dim, 6 * dim)
        nn.init.zeros_(self.proj.weight)
        nn.init.zeros_(self.proj.bias)

    def forward(self, cond: torch.Tensor):
        return self.proj(cond).chunk(6, dim=-1)


class Attention(nn.Module):
    def __init__(self, dim: int, heads: int):
        super().__init__()
        self.heads = heads
        self.head_dim = dim // heads
        self.qkv = nn.Linear(dim, 3 * dim)
        self.proj = nn.Linear(dim, dim)

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        n, d = x.shape
        qkv = self.qkv(x).reshape(n, 3, self.heads, self.head_dim)
        q, k, v = (qkv[:, i].transpose(0, 1) for i in range(3))  # (h, N, dh)
        scores = q @ k.transpose(-2, -1) / math.sqrt(self.head_dim)
        out = torch.softmax(scores, dim=-1) @ v
        return self.proj(out.transpose(0, 1).reshape(n, d))


class Block(nn.Module):
    """Pre-LN transformer block with AdaLN modulation and gated residuals."""

    def __init__(self, dim: int, heads: int, cond_dim: int):
        super().__init__()
        self.norm1 = nn.LayerNorm(dim, elementwise_affine=False)
        self.attn = Attention(dim, heads)
        self.norm2 = nn.LayerNorm(dim, elementwise_affine=False)
        self.mlp = nn.Sequential(nn.Linear(dim, 4 * dim), nn.GELU(),
                                 nn.Linear(4 * dim, dim))
        self.modulation = Modulation(cond_dim, dim)

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        s1, b1, g1, s2, b2, g2 = self.modulation(cond)
        x = x + (1 + g1) * self.attn(self.norm1(x) * (1 + s1) + b1)
        x = x + (1 + g2) * self.mlp(self.norm2(x) * (1 + s2) + b2)
        return x


class ViTEncoder(nn.Module):
    def __init__(self, config: EncoderConfig):
        super().__init__()
        self.config = config
        self.patch_embed = PatchEmbed(config.patch_size, config.in_channels,
                                      config.dim)
        self.pos_embed = nn.Parameter(torch.zeros(config.tokens, config.dim))
        self.blocks = nn.ModuleList(
            Block(config.dim, config.heads, config.cond_dim)
            for _ in range(config.depth))
        self.norm = nn.LayerNorm(config.dim)

    def forward(self, image: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        if image.shape != (self.config.image_size, self.config.image_size,
                           self.config.in_channels):
            raise ValueError(
                f"expected image of shape "
                f"({self.config.image_size}, {self.config.image_size}, "
                f"{self.config.in_channels}), got {tuple(image.shape)}")
        if cond.shape != (self.config.cond_dim,):
            raise ValueError("conditioning vector has the wrong length")
        x = self.patch_embed(patchify(image, self.config.patch_size))
        x = x + self.pos_embed
        for block in self.blocks:
            x = block(x, cond)
        return self.norm(x)


def init_encoder(encoder: ViTEncoder, generator: torch.Generator,
                 std: float = 0.02) -> ViTEncoder:
    """Deterministically initialize all weights from an explicit generator."""
    for name, p in encoder.named_parameters():
        if "modulation" in name:
            p.data.zero_()  # AdaLN starts as the identity
        elif p.ndim == 1:
            if name.endswith("norm.weight"):
                p.data.fill_(1.0)
            else:
                p.data.zero_()
        else:
            p.data.normal_(0.0, std, generator=generator)
    return encoder


def camera_tensor(camera: CameraPose, dtype=torch.float32) -> torch.Tensor:
    return torch.from_numpy(camera.conditioning()).to(dtype)


def encode_semantic(rgb: torch.Tensor, camera: CameraPose,
                    encoder: ViTEncoder, view_index: int = 0) -> TokenGrid:
    """Semantic tokens for one RGB view."""
    cond = camera_tensor(camera, rgb.dtype)
    return TokenGrid(encoder(rgb, cond), view_index, kind="semantic")


def stack_geometry(depth: torch.Tensor, normal: torch.Tensor,
                   depth_scale: float,
                   channel_zero: str = "none") -> torch.Tensor:
    """(H, W, 4) geometry image: nx, ny, nz, depth / depth_scale.

    ``channel_zero`` supports the input ablations: "depth" zeroes the depth
    channel (normal-only conditioning), "normal" zeroes the normal channels.
    """
    if not (torch.isfinite(depth).all() and torch.isfinite(normal).all()):
        raise ValueError("geometry inputs must be finite")
    d = depth / depth_scale
    stack = torch.cat([normal, d.unsqueeze(-1)], dim=-1)
    if channel_zero == "depth":
        stack = torch.cat([normal, torch.zeros_like(d).unsqueeze(-1)], dim=-1)
    elif channel_zero == "normal":
        stack = torch.cat([torch.zeros_like(normal), d.unsqueeze(-1)], dim=-1)
    elif channel_zero != "none":
        raise ValueError(f"unknown channel_zero mode {channel_zero!r}")
    return stack


def encode_geometry(depth: torch.Tensor, normal: torch.Tensor,
                    camera: CameraPose, encoder: ViTEncoder,
                    depth_scale: float, view_index: int = 0,
                    channel_zero: str = "none") -> TokenGrid:
    """Geometry tokens for one rendered (depth, normal) pair."""
    image = stack_geometry(depth, normal, depth_scale, channel_zero)
    cond = camera_tensor(camera, image.dtype)
    return TokenGrid(encoder(image, cond), view_index, kind="geometric")


def init_geometry_from_semantic(semantic: ViTEncoder) -> ViTEncoder:
    """Graft a 4-channel geometry encoder from a trained semantic encoder.

    All weights are copied; the patch embedding maps the normal channels
    through the copied RGB weights and the new depth channel starts at zero.
    """
    cfg = semantic.config
    if cfg.in_channels != 3:
        raise ValueError("source encoder must have 3 input channels")
    geo_cfg = EncoderConfig(image_size=cfg.image_size,
                            patch_size=cfg.patch_size, in_channels=4,
                            dim=cfg.dim, depth=cfg.depth, heads=cfg.heads,
                            cond_dim=cfg.cond_dim)
    geo = ViTEncoder(geo_cfg).to(semantic.pos_embed.dtype)
    src = dict(semantic.named_parameters())
    with torch.no_grad():
        for name, p in geo.named_parameters():
            if name == "patch_embed.weight":
                p.zero_()
                p[:3].copy_(src[name])
            else:
                p.copy_(src[name])
    return geo


def random_geometry_encoder(semantic: ViTEncoder,
                            generator: torch.Generator) -> ViTEncoder:
    """Ablation variant: same shapes as the graft, fresh random weights."""
    cfg = semantic.config
    geo = ViTEncoder(EncoderConfig(
        image_size=cfg.image_size, patch_size=cfg.patch_size, in_channels=4,
        dim=cfg.dim, depth=cfg.depth, heads=cfg.heads, cond_dim=cfg.cond_dim))
    return init_encoder(geo, generator).to(semantic.pos_embed.dtype)
