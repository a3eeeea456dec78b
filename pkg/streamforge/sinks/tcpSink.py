import logging
import re
import socket

from .eventSink import DeliveryReport, SinkError, eventSink

logger = logging.getLogger(__name__)

_ENDPOINT = re.compile(r"^(?:tcp://)?(?P<host>\[[^\]]+\]|[^:/\s]+):(?P<port>\d+)$")
BUFFER_SIZE = 1 << 16


def parse_endpoint(text):
    """``(host, port)`` of ``tcp://host:port`` or ``host:port``.

    Raises
    ------
    ValueError
        If `text` is not an endpoint.
    """
    match = _ENDPOINT.match(text.strip())
    if not match:
        raise ValueError(f"Not a TCP endpoint: {text!r}")
    port = int(match["port"])
    if not 0 < port < 65536:
        raise ValueError(f"Invalid port {port}")
    return match["host"].strip("[]"), port


def is_endpoint(text):
    """Whether `text` names a TCP endpoint rather than a file."""
    text = str(text)
    if text.startswith("tcp://"):
        return True
    try:
        parse_endpoint(text)
    except ValueError:
        return False
    return True


class tcpSink(eventSink):
    """Sink writing records to a TCP connection.

    Records are sent in batches of up to :data:`BUFFER_SIZE` bytes, and on
    :meth:`flush`. Writes block while the receiver lags behind.

    Parameters
    ----------
    endpoint : str or tuple
        ``host:port``, ``tcp://host:port`` or a ``(host, port)`` pair.
    suppress_case_ids : bool, optional
        Whether to omit case identifiers, by default ``False``.
    timeout : float, optional
        Connection timeout in seconds, by default 10.

    Raises
    ------
    SinkError
        If the connection cannot be opened.
    """
    def __init__(self, endpoint, suppress_case_ids=False, timeout=10.0):
        if isinstance(endpoint, str):
            endpoint = parse_endpoint(endpoint)
        self.endpoint = tuple(endpoint)
        try:
            self._sock = socket.create_connection(self.endpoint, timeout=timeout)
        except OSError as err:
            raise SinkError(
                f"Cannot connect to {self.endpoint[0]}:{self.endpoint[1]}: {err}",
                DeliveryReport(0, 0, 0.0),
            ) from err
        self._sock.settimeout(None)
        self._buffer = bytearray()
        super().__init__(suppress_case_ids)
        logger.debug("Connected to %s:%d", *self.endpoint)

    def __write__(self, data):
        self._buffer += data
        if len(self._buffer) >= BUFFER_SIZE:
            self.__flush__()

    def __flush__(self):
        if self._buffer:
            data, self._buffer = self._buffer, bytearray()
            self._sock.sendall(data)

    def __close__(self):
        try:
            self._sock.shutdown(socket.SHUT_WR)
        except OSError:
            pass
        self._sock.close()
        logger.info(
            "Delivered %d events (%d bytes) to %s:%d",
            self.events_sent, self.bytes_sent, *self.endpoint
        )

    def __repr__(self):
        return f"tcpSink({self.endpoint[0]}:{self.endpoint[1]})"
