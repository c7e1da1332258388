"""Chunked multi-stream decoding with dynamic batching.

Each stream owns a decoding channel whose state persists between chunks, so a
transcript is independent of how its frames were chunked or interleaved with
other streams. A step gathers the longest-waiting streams with a ready chunk
(up to the batch cap), advances their channels, and scatters the states back.
"""

from __future__ import annotations

from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .boosting import BoostTable, attach_boost
from .decoder import DecoderConfig, DecodeState, FlatGraph, Hypothesis, best_path, create_channel, flatten
from .errors import StreamError
from .wfst import Wfst

OPEN = "open"
DRAINING = "draining"
CLOSED = "closed"


@dataclass(frozen=True)
class Chunk:
    stream_id: int
    frames: np.ndarray  # (chunk_frames, num_tokens)
    is_last: bool = False

    def __post_init__(self):
        if len(self.frames) == 0 and not self.is_last:
            raise StreamError("only a final chunk may be empty")


@dataclass(frozen=True)
class BatcherConfig:
    max_batch: int = 8
    max_wait_ms: float = 0.0  # used by arrival-driven simulation, not step()

    def __post_init__(self):
        if self.max_batch < 1:
            raise StreamError(f"max_batch must be >= 1, got {self.max_batch}")
        if self.max_wait_ms < 0:
            raise StreamError(f"max_wait_ms must be >= 0, got {self.max_wait_ms}")


@dataclass
class _Stream:
    channel: DecodeState
    queue: deque = field(default_factory=deque)  # of (seq, Chunk)
    status: str = OPEN


class StreamPool:
    """Stream registry plus the dynamic batcher over their pending chunks."""

    def __init__(
        self,
        graph: Wfst | FlatGraph,
        config: DecoderConfig | None = None,
        batcher: BatcherConfig | None = None,
        max_streams: int | None = None,
        workers: int = 1,
    ):
        self.graph = graph if isinstance(graph, FlatGraph) else flatten(graph)
        self.config = config if config is not None else DecoderConfig()
        self.batcher = batcher if batcher is not None else BatcherConfig()
        self.max_streams = max_streams
        self._streams: dict[int, _Stream] = {}
        self._next_id = 0
        self._next_seq = 0
        self._pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None

    def create_stream(self, boost: BoostTable | None = None) -> int:
        open_count = sum(1 for s in self._streams.values() if s.status != CLOSED)
        if self.max_streams is not None and open_count >= self.max_streams:
            raise StreamError(f"stream capacity ({self.max_streams}) reached")
        channel = create_channel(self.graph, self.config)
        if boost is not None:
            attach_boost(channel, boost)
        stream_id = self._next_id
        self._next_id += 1
        self._streams[stream_id] = _Stream(channel=channel)
        return stream_id

    def _stream(self, stream_id: int) -> _Stream:
        try:
            return self._streams[stream_id]
        except KeyError:
            raise StreamError(f"unknown stream {stream_id}") from None

    def push_chunk(self, chunk: Chunk) -> None:
        stream = self._stream(chunk.stream_id)
        if stream.status != OPEN:
            raise StreamError(f"stream {chunk.stream_id} is {stream.status}, cannot push")
        stream.queue.append((self._next_seq, chunk))
        self._next_seq += 1
        if chunk.is_last:
            stream.status = DRAINING

    def ready_streams(self) -> list[int]:
        """Streams with a pending chunk, longest-waiting first (tie: id)."""
        ready = [
            (stream.queue[0][0], sid)
            for sid, stream in self._streams.items()
            if stream.queue
        ]
        ready.sort()
        return [sid for _, sid in ready]

    def step(self) -> list[tuple[int, Hypothesis | None]]:
        """Advance up to max_batch ready streams by one chunk each and return
        their partial hypotheses (None when a stream has no frames yet). An
        idle step returns an empty list."""
        selected = self.ready_streams()[: self.batcher.max_batch]
        if not selected:
            return []
        chunks = []
        for sid in selected:
            _, chunk = self._stream(sid).queue.popleft()
            chunks.append((sid, chunk))

        def run(item):
            sid, chunk = item
            channel = self._stream(sid).channel
            if len(chunk.frames) > 0:
                channel.advance_frames(chunk.frames)
            return sid, (best_path(channel) if channel.frame_count > 0 else None)

        if self._pool is not None:
            results = list(self._pool.map(run, chunks))
        else:
            results = [run(item) for item in chunks]
        return results

    def finish_stream(self, stream_id: int) -> Hypothesis:
        """Final hypothesis for a fully-drained stream; closes it."""
        stream = self._stream(stream_id)
        if stream.status == CLOSED:
            raise StreamError(f"stream {stream_id} already finished")
        if stream.status != DRAINING:
            raise StreamError(f"stream {stream_id} is still open")
        if stream.queue:
            raise StreamError(f"stream {stream_id} has pending chunks")
        hyp = best_path(stream.channel)  # raises on zero decoded frames
        stream.status = CLOSED
        stream.channel = None  # reclaim history
        return hyp

    def drain(self, max_steps: int = 1_000_000) -> dict[int, Hypothesis]:
        """Step until no chunk is pending, then finish every draining stream."""
        steps = 0
        while self.ready_streams():
            self.step()
            steps += 1
            if steps > max_steps:
                raise StreamError("drain did not converge")
        out = {}
        for sid, stream in self._streams.items():
            if stream.status == DRAINING and not stream.queue:
                out[sid] = self.finish_stream(sid)
        return out

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()
