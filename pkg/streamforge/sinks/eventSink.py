"""Destinations of replayed event streams.
"""
import time
from dataclasses import dataclass

from ..streamIO import encode_event


@dataclass(frozen=True)
class DeliveryReport:
    """Events and bytes a sink wrote, and the seconds it was open."""
    events_sent: int
    bytes_sent: int
    duration: float

    @property
    def rate(self):
        return self.events_sent / self.duration if self.duration > 0 else 0.0


class SinkError(OSError):
    """Delivery failure; `report` counts what was delivered before it."""
    def __init__(self, message, report):
        super().__init__(message)
        self.report = report


class eventSink():
    """Abstract event sink interface.
    Writes newline-delimited JSON records; where they go is implemented in
    the subclasses, which may buffer them until :meth:`flush` or
    :meth:`close`.

    Parameters
    ----------
    suppress_case_ids : bool, optional
        Whether to omit ``case`` and ``parent_case`` from records, by
        default ``False``.

    Attributes
    ----------
    events_sent : int
        Number of events written.
    bytes_sent : int
        Number of bytes written.
    """
    def __init__(self, suppress_case_ids=False):
        self.suppress_case_ids = suppress_case_ids
        self.events_sent = 0
        self.bytes_sent = 0
        self.closed = False
        self.__opened__ = time.monotonic()
        self.__closed_at__ = None

    def __write__(self, data):
        raise NotImplementedError

    def __close__(self):
        raise NotImplementedError

    def __flush__(self):
        pass

    def send(self, event):
        """Write one event.

        Raises
        ------
        SinkError
            If the destination fails; the report counts earlier events.
        """
        if self.closed:
            raise ValueError("Cannot send on a closed sink")
        data = (
            encode_event(event, self.suppress_case_ids) + "\n"
        ).encode("utf-8")
        try:
            self.__write__(data)
        except OSError as err:
            raise SinkError(f"Delivery failed: {err}", self.report) from err
        self.events_sent += 1
        self.bytes_sent += len(data)

    def flush(self):
        """Hand buffered records over to the destination.

        Raises
        ------
        SinkError
            If the destination fails.
        """
        if self.closed:
            return
        try:
            self.__flush__()
        except OSError as err:
            raise SinkError(f"Delivery failed: {err}", self.report) from err

    def close(self):
        if not self.closed:
            try:
                self.flush()
            finally:
                self.closed = True
                self.__closed_at__ = time.monotonic()
                self.__close__()

    @property
    def report(self):
        end = self.__closed_at__ or time.monotonic()
        return DeliveryReport(
            self.events_sent, self.bytes_sent, end - self.__opened__
        )

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
        return False
