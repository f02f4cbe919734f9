"""Tiny block-structured CNN for desk-scale end-to-end runs."""

from __future__ import annotations

import torch
from torch import nn

ORDER_STYLES = ("Conv-BN-ReLU", "BN-ReLU-Conv")


def _block(c_in: int, c_out: int, order_style: str, pool: bool) -> nn.Sequential:
    if order_style == "Conv-BN-ReLU":
        layers = [
            nn.Conv2d(c_in, c_out, kernel_size=3, padding=1),
            nn.BatchNorm2d(c_out),
            nn.ReLU(),
        ]
    else:
        layers = [
            nn.BatchNorm2d(c_in),
            nn.ReLU(),
            nn.Conv2d(c_in, c_out, kernel_size=3, padding=1),
        ]
    if pool:
        layers.append(nn.MaxPool2d(kernel_size=2, stride=2))
    return nn.Sequential(*layers)


class DemoNet(nn.Module):
    """2-4 blocks of conv/bn/relu in either order, global-pool head."""

    def __init__(
        self,
        channels: tuple[int, ...] = (16, 32, 64),
        num_classes: int = 2,
        in_channels: int = 3,
        order_style: str = "Conv-BN-ReLU",
    ):
        super().__init__()
        if not 2 <= len(channels) <= 4:
            raise ValueError(f"demo net wants 2-4 blocks, got {len(channels)}")
        if order_style not in ORDER_STYLES:
            raise ValueError(f"unknown order style {order_style!r}")
        self.order_style = order_style
        self.channels = tuple(channels)
        self.in_channels = in_channels
        self.num_classes = num_classes

        blocks = []
        c_prev = in_channels
        for i, c_out in enumerate(channels):
            pool = i < len(channels) - 1  # keep the last map at full resolution
            blocks.append(_block(c_prev, c_out, order_style, pool))
            c_prev = c_out
        self.blocks = nn.ModuleList(blocks)
        self.head = nn.Sequential(
            nn.AdaptiveAvgPool2d(1),
            nn.Flatten(),
            nn.Linear(c_prev, num_classes),
        )

    def forward(self, x: torch.Tensor) -> torch.Tensor:
        for block in self.blocks:
            x = block(x)
        return self.head(x)

    def config(self) -> dict:
        return {
            "channels": list(self.channels),
            "num_classes": self.num_classes,
            "in_channels": self.in_channels,
            "order_style": self.order_style,
        }

    @classmethod
    def from_config(cls, config: dict) -> "DemoNet":
        return cls(
            channels=tuple(config["channels"]),
            num_classes=config["num_classes"],
            in_channels=config["in_channels"],
            order_style=config["order_style"],
        )
