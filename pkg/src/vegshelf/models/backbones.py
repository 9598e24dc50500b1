"""Feature-extractor backbones.

Six roles are registered: a light CNN, two deep CNNs, a capsule stack, a
distilled vision transformer and a CNN-to-LSTM chain. Every role ships a
``tiny`` variant (random init, a few layers) sized for fast CPU test runs and
a ``full`` variant backed by torchvision / transformers weights. Both variants
of a role expose the same interface: batch of images in, fixed-dimension
feature batch out.
"""

from __future__ import annotations

import torch
from torch import nn

from ..errors import RegistryError, WeightsError


def squash(s: torch.Tensor, dim: int = -1, eps: float = 1e-8) -> torch.Tensor:
    """Capsule nonlinearity: scales vector norms into (0, 1)."""
    n2 = (s * s).sum(dim=dim, keepdim=True)
    return (n2 / (1.0 + n2)) * s / (n2.sqrt() + eps)


class TinyConvNet(nn.Module):
    """Small stack of stride-2 conv blocks ending in global average pooling."""

    def __init__(self, channels: list[int], residual: bool = False):
        super().__init__()
        blocks = []
        c_in = 3
        for c_out in channels:
            blocks.append(nn.Sequential(
                nn.Conv2d(c_in, c_out, 3, stride=2, padding=1),
                nn.BatchNorm2d(c_out),
                nn.ReLU(inplace=True),
            ))
            c_in = c_out
        self.blocks = nn.ModuleList(blocks)
        self.residual = residual
        self.out_dim = channels[-1]

    def feature_map(self, x: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            y = block(x)
            if self.residual and y.shape[1] == x.shape[1]:
                y = y + nn.functional.avg_pool2d(x, 2)
            x = y
        return x

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.feature_map(x).mean(dim=(2, 3))


class TinyConvLSTM(nn.Module):
    """Conv stem whose spatial grid is read row-major as a sequence; the final
    LSTM hidden state is the feature vector."""

    def __init__(self, channels: list[int], hidden: int):
        super().__init__()
        self.stem = TinyConvNet(channels)
        self.lstm = nn.LSTM(channels[-1], hidden, batch_first=True)
        self.out_dim = hidden

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        fmap = self.stem.feature_map(x)  # B,C,H,W
        b, c, h, w = fmap.shape
        seq = fmap.permute(0, 2, 3, 1).reshape(b, h * w, c)
        _, (h_n, _) = self.lstm(seq)
        return h_n[-1]


class TinyCapsuleNet(nn.Module):
    """One primary-capsule layer plus one routed capsule layer with dynamic
    routing (3 iterations) and squash nonlinearities."""

    def __init__(self, n_primary: int = 2, primary_dim: int = 8,
                 n_out: int = 4, out_capsule_dim: int = 16, grid: int = 6,
                 routing_iters: int = 3):
        super().__init__()
        self.stem = nn.Sequential(
            nn.Conv2d(3, 16, 3, stride=2, padding=1), nn.ReLU(inplace=True),
            nn.Conv2d(16, n_primary * primary_dim, 3, stride=2, padding=1),
        )
        self.pool = nn.AdaptiveAvgPool2d(grid)
        self.n_primary = n_primary
        self.primary_dim = primary_dim
        self.n_in = n_primary * grid * grid
        self.n_out = n_out
        self.out_capsule_dim = out_capsule_dim
        self.routing_iters = routing_iters
        self.W = nn.Parameter(
            0.05 * torch.randn(self.n_in, n_out, out_capsule_dim, primary_dim))
        self.out_dim = n_out * out_capsule_dim

    def output_capsules(self, x: torch.Tensor) -> torch.Tensor:
        b = x.shape[0]
        y = self.pool(self.stem(x))  # B, n_primary*primary_dim, g, g
        u = y.reshape(b, self.n_primary, self.primary_dim, -1)
        u = u.permute(0, 1, 3, 2).reshape(b, self.n_in, self.primary_dim)
        u = squash(u)
        # prediction vectors u_hat[b, i, j, :] = W[i, j] @ u[b, i]
        u_hat = torch.einsum("ijdp,bip->bijd", self.W, u)
        logits = torch.zeros(b, self.n_in, self.n_out, device=x.device)
        for it in range(self.routing_iters):
            c = torch.softmax(logits, dim=2)
            s = (c.unsqueeze(-1) * u_hat).sum(dim=1)  # B, n_out, out_dim
            v = squash(s)
            if it < self.routing_iters - 1:
                logits = logits + torch.einsum("bijd,bjd->bij", u_hat, v)
        return v

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        return self.output_capsules(x).flatten(1)


class TinyViT(nn.Module):
    """Patch embedding + class token + a couple of transformer encoder layers;
    the class-token embedding is the feature."""

    def __init__(self, input_size: int, patch: int = 8, dim: int = 36,
                 depth: int = 2, heads: int = 4):
        super().__init__()
        if input_size % patch:
            raise RegistryError(f"input size {input_size} not divisible by patch {patch}")
        n_patches = (input_size // patch) ** 2
        self.patch_embed = nn.Conv2d(3, dim, patch, stride=patch)
        self.cls_token = nn.Parameter(0.02 * torch.randn(1, 1, dim))
        self.pos_embed = nn.Parameter(0.02 * torch.randn(1, n_patches + 1, dim))
        layer = nn.TransformerEncoderLayer(
            dim, heads, dim_feedforward=2 * dim, batch_first=True, dropout=0.0)
        self.encoder = nn.TransformerEncoder(layer, depth)
        self.out_dim = dim

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        tokens = self.patch_embed(x).flatten(2).transpose(1, 2)  # B, N, dim
        cls = self.cls_token.expand(tokens.shape[0], -1, -1)
        z = torch.cat([cls, tokens], dim=1) + self.pos_embed
        return self.encoder(z)[:, 0]


# -- full variants (lazy imports; weights need network access) ---------------

class _TorchvisionFeatures(nn.Module):
    def __init__(self, features: nn.Module, out_dim: int):
        super().__init__()
        self.features = features
        self.out_dim = out_dim

    def forward(self, x):
        return self.features(x).mean(dim=(2, 3))


def _full_cnn(name: str, pretrained: bool) -> nn.Module:
    try:
        from torchvision import models as tvm
    except ImportError as exc:
        raise WeightsError("torchvision is required for full backbones") from exc
    weights = "DEFAULT" if pretrained else None
    try:
        if name == "mobilenet_v2":
            return _TorchvisionFeatures(tvm.mobilenet_v2(weights=weights).features, 1280)
        if name == "vgg16":
            return _TorchvisionFeatures(tvm.vgg16(weights=weights).features, 512)
        if name == "resnet50":
            m = tvm.resnet50(weights=weights)
            return _TorchvisionFeatures(nn.Sequential(*list(m.children())[:-2]), 2048)
    except Exception as exc:
        raise WeightsError(f"could not load weights for {name}: {exc}") from exc
    raise RegistryError(name)


class _FullConvLSTM(nn.Module):
    def __init__(self, pretrained: bool, hidden: int = 256):
        super().__init__()
        self.cnn = _full_cnn("mobilenet_v2", pretrained)
        self.lstm = nn.LSTM(1280, hidden, batch_first=True)
        self.out_dim = hidden

    def forward(self, x):
        fmap = self.cnn.features(x)
        b, c, h, w = fmap.shape
        seq = fmap.permute(0, 2, 3, 1).reshape(b, h * w, c)
        _, (h_n, _) = self.lstm(seq)
        return h_n[-1]


class _FullDeiT(nn.Module):
    def __init__(self, pretrained: bool):
        super().__init__()
        try:
            from transformers import AutoModel
        except ImportError as exc:
            raise WeightsError("transformers is required for the full distilled ViT") from exc
        name = "facebook/deit-base-distilled-patch16-224"
        try:
            self.vit = AutoModel.from_pretrained(name) if pretrained else AutoModel.from_config(
                __import__("transformers").AutoConfig.from_pretrained(name))
        except Exception as exc:
            raise WeightsError(f"could not load {name}: {exc}") from exc
        self.out_dim = self.vit.config.hidden_size

    def forward(self, x):
        return self.vit(pixel_values=x).last_hidden_state[:, 0]


BACKBONES = {
    "cnn_light": {
        "tiny": lambda size: TinyConvNet([16, 24, 32]),
        "full": lambda pretrained: _full_cnn("mobilenet_v2", pretrained),
    },
    "cnn_deep_vgg": {
        "tiny": lambda size: TinyConvNet([16, 32, 48, 48]),
        "full": lambda pretrained: _full_cnn("vgg16", pretrained),
    },
    "cnn_deep_res": {
        "tiny": lambda size: TinyConvNet([16, 40, 40, 40], residual=True),
        "full": lambda pretrained: _full_cnn("resnet50", pretrained),
    },
    "capsule": {
        "tiny": lambda size: TinyCapsuleNet(),
        "full": lambda pretrained: TinyCapsuleNet(n_primary=4, n_out=8, grid=8),
    },
    "vit_distilled": {
        "tiny": lambda size: TinyViT(size),
        "full": lambda pretrained: _FullDeiT(pretrained),
    },
    "cnn_light_lstm": {
        "tiny": lambda size: TinyConvLSTM([16, 24, 32], hidden=44),
        "full": lambda pretrained: _FullConvLSTM(pretrained),
    },
}


def build_backbone(backbone_id: str, variant: str = "tiny",
                   pretrained: bool = False, input_size: int = 224) -> nn.Module:
    """Instantiate a registered backbone; the module carries ``out_dim``."""
    if backbone_id not in BACKBONES:
        raise RegistryError(
            f"unknown backbone {backbone_id!r}; known: {sorted(BACKBONES)}")
    entry = BACKBONES[backbone_id]
    if variant == "tiny":
        return entry["tiny"](input_size)
    if variant == "full":
        return entry["full"](pretrained)
    raise RegistryError(f"unknown variant {variant!r} (expected tiny|full)")
