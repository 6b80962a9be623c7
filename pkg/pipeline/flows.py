"""
Per-connection TCP handshake and sequence tracking.

A flow only counts as established after the full SYN, SYN-ACK, ACK
exchange has been observed. Flows first seen midstream stay in the
``none`` phase and are never established.
"""
from dataclasses import dataclass, field
from typing import Dict, Optional, Set, Tuple
import logging

from .decoder import Endpoint, ParsedPacket, TcpFlags

logger = logging.getLogger(__name__)

SEQ_MODULO = 1 << 32
USEC_PER_SEC = 1_000_000


class FlowPhase:
    NONE = "none"
    SYN_SEEN = "syn_seen"
    SYNACK_SEEN = "synack_seen"
    ESTABLISHED = "established"
    CLOSED = "closed"


FlowKey = Tuple[Endpoint, Endpoint]


def flow_key(pkt: ParsedPacket) -> FlowKey:
    a, b = pkt.source, pkt.destination
    return (a, b) if a <= b else (b, a)


@dataclass
class FlowState:
    key: FlowKey
    phase: str = FlowPhase.NONE
    initiator: Optional[Endpoint] = None
    isn: Dict[Endpoint, int] = field(default_factory=dict)
    expected_seq: Dict[Endpoint, int] = field(default_factory=dict)
    fin_from: Set[Endpoint] = field(default_factory=set)
    last_activity: int = 0

    @property
    def established(self) -> bool:
        return self.phase == FlowPhase.ESTABLISHED


@dataclass(frozen=True)
class FlowVerdict:
    established: bool = False
    new_flow: bool = False
    seq_anomaly: bool = False
    from_initiator: Optional[bool] = None


NOT_TRACKED = FlowVerdict()


def _seq_offset(seq: int, base: int) -> int:
    return (seq - base) % SEQ_MODULO


class FlowTable:
    def __init__(self, seq_window: int = 65535, idle_timeout: float = 300.0):
        self.seq_window = seq_window
        self.idle_timeout_us = int(idle_timeout * USEC_PER_SEC)
        self.flows: Dict[FlowKey, FlowState] = {}
        self._last_sweep = 0

    def __len__(self) -> int:
        return len(self.flows)

    def get(self, pkt: ParsedPacket) -> Optional[FlowState]:
        return self.flows.get(flow_key(pkt))

    def expire(self, now: int) -> int:
        stale = [key for key, state in self.flows.items() if now - state.last_activity > self.idle_timeout_us]
        for key in stale:
            del self.flows[key]
        if stale:
            logger.debug(f"Expired {len(stale)} idle flows")
        return len(stale)

    def _maybe_sweep(self, now: int) -> None:
        if now - self._last_sweep >= USEC_PER_SEC:
            self._last_sweep = now
            self.expire(now)

    def update(self, pkt: ParsedPacket) -> FlowVerdict:
        if not pkt.is_tcp:
            return NOT_TRACKED
        now = pkt.timestamp
        self._maybe_sweep(now)

        key = flow_key(pkt)
        state = self.flows.get(key)
        syn = pkt.has_flag(TcpFlags.SYN)
        ack = pkt.has_flag(TcpFlags.ACK)
        new_flow = False

        if state is None or (state.phase == FlowPhase.CLOSED and syn and not ack):
            state = FlowState(key=key)
            self.flows[key] = state
            new_flow = True
        state.last_activity = now

        sender = pkt.source
        from_initiator = None if state.initiator is None else sender == state.initiator

        if state.phase == FlowPhase.ESTABLISHED:
            return self._update_established(state, pkt, new_flow, from_initiator)

        if syn and not ack and state.phase == FlowPhase.NONE:
            state.phase = FlowPhase.SYN_SEEN
            state.initiator = sender
            state.isn[sender] = pkt.tcp_seq
            from_initiator = True
        elif syn and ack and state.phase == FlowPhase.SYN_SEEN and sender != state.initiator:
            state.phase = FlowPhase.SYNACK_SEEN
            state.isn[sender] = pkt.tcp_seq
        elif ack and not syn and state.phase == FlowPhase.SYNACK_SEEN and sender == state.initiator:
            state.phase = FlowPhase.ESTABLISHED
            for endpoint, isn in state.isn.items():
                state.expected_seq[endpoint] = (isn + 1) % SEQ_MODULO
            self._advance(state, pkt)
        elif pkt.has_flag(TcpFlags.RST) and state.phase != FlowPhase.NONE:
            state.phase = FlowPhase.CLOSED

        return FlowVerdict(
            established=state.established,
            new_flow=new_flow,
            seq_anomaly=False,
            from_initiator=from_initiator,
        )

    def _update_established(
        self,
        state: FlowState,
        pkt: ParsedPacket,
        new_flow: bool,
        from_initiator: Optional[bool],
    ) -> FlowVerdict:
        sender = pkt.source
        expected = state.expected_seq.get(sender)
        anomaly = False
        if expected is not None and _seq_offset(pkt.tcp_seq, expected) > self.seq_window:
            anomaly = True
        else:
            self._advance(state, pkt)

        if pkt.has_flag(TcpFlags.FIN):
            state.fin_from.add(sender)
        verdict = FlowVerdict(
            established=True,
            new_flow=new_flow,
            seq_anomaly=anomaly,
            from_initiator=from_initiator,
        )
        if pkt.has_flag(TcpFlags.RST) or len(state.fin_from) == 2:
            state.phase = FlowPhase.CLOSED
        return verdict

    def _advance(self, state: FlowState, pkt: ParsedPacket) -> None:
        sender = pkt.source
        length = len(pkt.tcp_payload)
        if pkt.has_flag(TcpFlags.FIN):
            length += 1
        if length == 0:
            return
        expected = state.expected_seq.get(sender)
        end = (pkt.tcp_seq + length) % SEQ_MODULO
        if expected is None or _seq_offset(end, expected) <= self.seq_window:
            state.expected_seq[sender] = end


def flow_update(table: FlowTable, pkt: ParsedPacket) -> FlowVerdict:
    return table.update(pkt)
