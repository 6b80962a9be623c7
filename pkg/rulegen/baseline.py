"""
Baseline traffic profile learned from a benign capture.

The profile keeps two views of DNP3 traffic: which function codes each
master uses toward each outstation link address, and how those requests
are spread over time.
"""
from collections import Counter
from dataclasses import dataclass, field
from hashlib import sha256
from math import ceil
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, Optional, Set, Tuple, Union
import logging

import numpy as np

from pipeline.capture import CaptureRecord, read_capture
from pipeline.decoder import Skip, decode_packet

from .constants import DEFAULT_K_SIGMA, DEFAULT_WINDOW
from .exceptions import NoDnp3Traffic

logger = logging.getLogger(__name__)

USEC_PER_SEC = 1_000_000

TupleKey = Tuple[str, int]
TimingKey = Tuple[str, int, int]


@dataclass(frozen=True)
class TimingStats:
    count: int
    mean_interval: float
    std_interval: float
    max_burst: int
    burst_mean: float = 0.0
    burst_std: float = 0.0

    def rate_bound(self, k_sigma: float = DEFAULT_K_SIGMA) -> int:
        """Smallest per-window count treated as anomalous."""
        return max(self.max_burst + 1, ceil(self.burst_mean + k_sigma * self.burst_std))


@dataclass
class BaselineProfile:
    function_matrix: Dict[TupleKey, Counter] = field(default_factory=dict)
    timing_stats: Dict[TimingKey, TimingStats] = field(default_factory=dict)
    masters: Set[str] = field(default_factory=set)
    outstations: Set[str] = field(default_factory=set)
    ports: Set[int] = field(default_factory=set)
    window: int = DEFAULT_WINDOW
    capture_id: str = ""
    frames: int = 0

    @property
    def endpoints(self) -> FrozenSet[str]:
        return frozenset(self.masters | self.outstations)

    def functions_for(self, master_ip: str, outstation_address: int) -> Counter:
        return self.function_matrix.get((master_ip, outstation_address), Counter())

    def outstation_addresses(self) -> Set[int]:
        return {address for _, address in self.function_matrix}


def burst_counts(times: np.ndarray, window_us: int) -> np.ndarray:
    """Events inside the sliding window [t, t + W) opened at every event."""
    ends = np.searchsorted(times, times + window_us, side="left")
    return ends - np.arange(len(times))


def timing_for(times: Iterable[int], window: int = DEFAULT_WINDOW) -> TimingStats:
    stamps = np.sort(np.asarray(list(times), dtype=np.int64))
    counts = burst_counts(stamps, window * USEC_PER_SEC)
    if len(stamps) < 2:
        mean_interval, std_interval = 0.0, 0.0
    else:
        intervals = np.diff(stamps) / USEC_PER_SEC
        mean_interval, std_interval = float(intervals.mean()), float(intervals.std())
    return TimingStats(
        count=int(len(stamps)),
        mean_interval=mean_interval,
        std_interval=std_interval,
        max_burst=int(counts.max()),
        burst_mean=float(counts.mean()),
        burst_std=float(counts.std()),
    )


def learn_baseline(
    capture: Union[str, Path, Iterable[CaptureRecord]],
    window: int = DEFAULT_WINDOW,
    capture_id: Optional[str] = None,
) -> BaselineProfile:
    """
    Aggregate the DNP3 frames of a capture into a baseline profile.

    Function codes and timing come from requests, keyed by (source ip,
    link destination). Responses only add endpoints and ports.

    Raises:
        NoDnp3Traffic: the capture holds no parseable DNP3 frame
    """
    records = read_capture(capture) if isinstance(capture, (str, Path)) else capture
    profile = BaselineProfile(window=window)
    arrivals: Dict[TimingKey, list] = {}
    digest = sha256()

    for record in records:
        digest.update(record.data)
        pkt = decode_packet(record)
        if isinstance(pkt, Skip) or not pkt.dnp3_frames:
            continue
        for frame in pkt.dnp3_frames:
            if frame.function_code is None:
                continue
            profile.frames += 1
            if frame.is_request:
                key = (pkt.src_ip, frame.link.destination)
                profile.function_matrix.setdefault(key, Counter())[frame.function_code] += 1
                arrivals.setdefault(key + (frame.function_code,), []).append(pkt.timestamp)
                profile.masters.add(pkt.src_ip)
                profile.outstations.add(pkt.dst_ip)
                profile.ports.add(pkt.dst_port)
            else:
                profile.masters.add(pkt.dst_ip)
                profile.outstations.add(pkt.src_ip)
                profile.ports.add(pkt.src_port)

    if not profile.frames:
        raise NoDnp3Traffic()
    for key in sorted(arrivals):
        profile.timing_stats[key] = timing_for(arrivals[key], window)
    profile.capture_id = capture_id or digest.hexdigest()[:16]
    logger.info(
        f"Learned baseline {profile.capture_id}: {profile.frames} frames, "
        f"{len(profile.function_matrix)} master/outstation pairs, {len(profile.timing_stats)} timing keys"
    )
    return profile
