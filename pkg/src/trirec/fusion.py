"""Token-level residual fusion of semantic and geometric embeddings.

``fused = sem + f(sem, geo)`` where ``f`` is a two-layer network whose
output layer starts at exactly zero, so fusion is the identity until the
refiner is trained. The token-concat mode is the ablation that appends
geometric tokens instead of fusing them.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .encoders import TokenGrid

MODES = ("residual", "token_concat", "disabled")
COMBINES = ("concat", "sum")


class FusionNetwork(nn.Module):
    def __init__(self, dim: int, hidden: int | None = None,
                 mode: str = "residual", combine: str = "concat"):
        super().__init__()
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if combine not in COMBINES:
            raise ValueError(f"combine must be one of {COMBINES}")
        hidden = dim if hidden is None else hidden
        in_dim = 2 * dim if combine == "concat" else dim
        self._mode = mode
        self.combine = combine
        self.lin1 = nn.Linear(in_dim, hidden)
        self.act = nn.SiLU()
        self.lin2 = nn.Linear(hidden, dim)
        nn.init.zeros_(self.lin2.weight)
        nn.init.zeros_(self.lin2.bias)

    @property
    def mode(self) -> str:
        return self._mode

    def init_input_layer(self, generator: torch.Generator,
                         std: float = 0.02) -> None:
        self.lin1.weight.data.normal_(0.0, std, generator=generator)
        self.lin1.bias.data.zero_()

    def residual(self, sem: torch.Tensor, geo: torch.Tensor) -> torch.Tensor:
        if self.combine == "concat":
            x = torch.cat([sem, geo], dim=-1)
        else:
            x = sem + geo
        return self.lin2(self.act(self.lin1(x)))

    def forward(self, sem: torch.Tensor, geo: torch.Tensor) -> torch.Tensor:
        return sem + self.residual(sem, geo)


def fuse(sem: TokenGrid, geo: TokenGrid, net: FusionNetwork) -> TokenGrid:
    """Fuse matching token grids from the same view."""
    if net.mode == "disabled":
        return sem
    if sem.tokens.shape != geo.tokens.shape:
        raise ValueError("semantic and geometric token shapes differ")
    if sem.view_index != geo.view_index:
        raise ValueError("token grids come from different views")
    if net.mode == "token_concat":
        return concat_variant(sem, geo)
    return TokenGrid(net(sem.tokens, geo.tokens), sem.view_index, kind="fused")


def concat_variant(sem: TokenGrid, geo: TokenGrid) -> TokenGrid:
    """Ablation: append geometric tokens after semantic ones (2N tokens)."""
    if sem.tokens.shape != geo.tokens.shape:
        raise ValueError("semantic and geometric token shapes differ")
    tokens = torch.cat([sem.tokens, geo.tokens], dim=0)
    return TokenGrid(tokens, sem.view_index, kind="fused")
