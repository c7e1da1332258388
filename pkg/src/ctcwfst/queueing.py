"""M/D/1 queueing model and latency statistics.

The inference server is modeled as a single server with deterministic service
time D (mu = 1/D) and Poisson arrivals at rate lambda. The closed form for
average total latency is 1/mu + lambda / (2 mu (mu - lambda)); the discrete
event simulator below converges to it in the stable region and demonstrates
the growing queue when overloaded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InstabilityError, QueueingError


@dataclass(frozen=True)
class MD1Params:
    lam: float  # arrival rate, requests/sec
    mu: float  # service rate, requests/sec (1 / compute latency)

    def __post_init__(self):
        if not self.mu > 0:
            raise QueueingError(f"service rate must be positive, got {self.mu}")
        if self.lam < 0:
            raise QueueingError(f"arrival rate must be >= 0, got {self.lam}")
        if self.lam >= self.mu:
            raise InstabilityError(
                f"unstable queue: arrival rate {self.lam} >= service rate {self.mu}, "
                "queues grow without bound"
            )


class MD1Latency(NamedTuple):
    compute: float  # seconds
    queue: float  # seconds
    total: float  # seconds


@dataclass(frozen=True)
class LatencyStats:
    avg_compute_ms: float
    avg_queue_ms: float
    avg_total_ms: float
    p99_total_ms: float
    rtfx: float

    def to_dict(self) -> dict[str, float]:
        return {
            "avg_compute_ms": self.avg_compute_ms,
            "avg_queue_ms": self.avg_queue_ms,
            "avg_total_ms": self.avg_total_ms,
            "p99_total_ms": self.p99_total_ms,
            "rtfx": self.rtfx,
        }


@dataclass(frozen=True)
class SimResult:
    stats: LatencyStats
    unstable: bool
    queue_wait_window_means_ms: tuple[float, ...]  # trend probe over arrival windows


def md1_latency(p: MD1Params) -> MD1Latency:
    """Closed-form average latencies: compute 1/mu, queue lam/(2 mu (mu-lam))."""
    compute = 1.0 / p.mu
    queue = p.lam / (2.0 * p.mu * (p.mu - p.lam))
    return MD1Latency(compute=compute, queue=queue, total=compute + queue)


def simulate_md1(lam: float, service_time: float, n_arrivals: int, seed: int) -> SimResult:
    """Single-server FIFO simulation with exponential inter-arrival times from
    a seeded numpy PCG64 generator and deterministic service. Unstable
    parameter choices run fine and come back flagged."""
    if n_arrivals < 1:
        raise QueueingError(f"n_arrivals must be >= 1, got {n_arrivals}")
    if not lam > 0:
        raise QueueingError(f"arrival rate must be positive, got {lam}")
    if not service_time > 0:
        raise QueueingError(f"service time must be positive, got {service_time}")

    rng = np.random.Generator(np.random.PCG64(seed))
    arrivals = np.cumsum(rng.exponential(1.0 / lam, size=n_arrivals))

    # finish[i] = max(arrival[i], finish[i-1]) + D, unrolled via cumulative max.
    d = service_time
    idx = np.arange(n_arrivals, dtype=np.float64)
    finish = np.maximum.accumulate(arrivals - idx * d) + (idx + 1.0) * d
    waits = finish - d - arrivals

    samples = [(d * 1e3, float(w) * 1e3) for w in waits]
    stats = compute_stats(samples)

    n_windows = min(10, n_arrivals)
    window_means = tuple(
        float(np.mean(chunk)) * 1e3 for chunk in np.array_split(waits, n_windows)
    )
    return SimResult(
        stats=stats,
        unstable=lam >= 1.0 / service_time,
        queue_wait_window_means_ms=window_means,
    )


def compute_stats(samples: Sequence[tuple[float, float]], rtfx: float = 0.0) -> LatencyStats:
    """Aggregate (compute_ms, queue_ms) samples: component means, mean total,
    and P99 as the ceil(0.99 n)-th order statistic of the totals."""
    if not samples:
        raise QueueingError("no latency samples")
    computes = [c for c, _ in samples]
    queues = [q for _, q in samples]
    totals = sorted(c + q for c, q in samples)
    n = len(samples)
    p99_index = math.ceil(0.99 * n) - 1
    return LatencyStats(
        avg_compute_ms=math.fsum(computes) / n,
        avg_queue_ms=math.fsum(queues) / n,
        avg_total_ms=math.fsum(totals) / n,
        p99_total_ms=totals[p99_index],
        rtfx=rtfx,
    )


def rtfx(audio_seconds: float, wall_seconds: float) -> float:
    """Audio duration processed per unit of wall-clock time."""
    if wall_seconds <= 0:
        raise QueueingError(f"wall time must be positive, got {wall_seconds}")
    return audio_seconds / wall_seconds
