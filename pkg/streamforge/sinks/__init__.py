__all__ = [
    "eventSink",
    "fileSink",
    "tcpSink",
    "DeliveryReport",
    "SinkError",
    "replay_to_sink",
    "tcp_sink",
    "parse_endpoint",
    "is_endpoint",
]

from .eventSink import eventSink, DeliveryReport, SinkError
from .fileSink import fileSink
from .tcpSink import tcpSink, parse_endpoint, is_endpoint
from .eventQueue import replay_to_sink, tcp_sink
