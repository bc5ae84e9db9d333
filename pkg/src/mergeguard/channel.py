"""Unit-disk broadcast channel with seeded loss and latency jitter.

A transmission reaches every other station within comm_range (Euclidean,
road frame).  Each in-range receiver independently draws packet loss and
then, if delivered, a latency

    delivery_time = tx_time + latency_base + U(0, latency_jitter)

Draws consume the seeded stream in ascending receiver-id order, so a
given (seed, broadcast sequence) always yields the same deliveries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


class ChannelError(Exception):
    pass


@dataclass(frozen=True)
class ChannelConfig:
    comm_range_m: float = 150.0
    loss_prob: float = 0.0
    latency_base_s: float = 0.01
    latency_jitter_s: float = 0.005

    def __post_init__(self):
        if self.comm_range_m <= 0:
            raise ChannelError("comm_range_m must be positive")
        if not 0.0 <= self.loss_prob <= 1.0:
            raise ChannelError("loss_prob must be in [0, 1]")
        if self.latency_base_s < 0 or self.latency_jitter_s < 0:
            raise ChannelError("latencies must be non-negative")


@dataclass(frozen=True)
class Delivery:
    receiver_id: int
    delivery_time_s: float


class Channel:
    def __init__(self, config: ChannelConfig, seed: int):
        self.config = config
        self.rng = np.random.default_rng(seed)

    def broadcast(self, tx_pos: Sequence[float], tx_time_s: float,
                  receivers: Sequence[tuple[int, Sequence[float]]]) -> list[Delivery]:
        """Deliveries for one broadcast; receivers are (station_id, position)."""
        in_range = []
        for rid, pos in receivers:
            dist = math.hypot(pos[0] - tx_pos[0], pos[1] - tx_pos[1])
            if dist <= self.config.comm_range_m:
                in_range.append(rid)
        deliveries = []
        for rid in sorted(in_range):
            lost = self.rng.random() < self.config.loss_prob
            if lost:
                continue
            jitter = self.rng.random() * self.config.latency_jitter_s
            deliveries.append(Delivery(rid, tx_time_s + self.config.latency_base_s + jitter))
        return deliveries
