from .capture import CaptureRecord, read_capture, write_capture
from .decoder import ParsedPacket, Skip, SkipReason, decode_packet
from .flows import FlowTable, FlowVerdict, flow_update
from .pipeline import Mode, Pipeline, PipelineCounters, PipelineResult, run_pipeline, wall_clock

__all__ = [
    'CaptureRecord',
    'read_capture',
    'write_capture',
    'ParsedPacket',
    'Skip',
    'SkipReason',
    'decode_packet',
    'FlowTable',
    'FlowVerdict',
    'flow_update',
    'Mode',
    'Pipeline',
    'PipelineCounters',
    'PipelineResult',
    'run_pipeline',
    'wall_clock',
]
