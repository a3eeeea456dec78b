"""Producer/consumer replay of events into a sink through a bounded queue.
"""
import logging
import queue
import threading
import time

from .tcpSink import tcpSink

logger = logging.getLogger(__name__)

_DONE = object()


def _produce(events, q, stop, errors):
    try:
        for event in events:
            while not stop.is_set():
                try:
                    q.put(event, timeout=0.1)
                    break
                except queue.Full:
                    continue
            if stop.is_set():
                return
    except Exception as err:
        errors.append(err)
    finally:
        while not stop.is_set():
            try:
                q.put(_DONE, timeout=0.1)
                return
            except queue.Full:
                continue


def replay_to_sink(events, sink, rate=None, queue_size=1024):
    """Push `events` through `sink` in order.

    A producer thread feeds a bounded queue that the calling thread drains
    into the sink, so a slow sink blocks the producer. The sink is flushed
    after every event when `rate` is set, and otherwise whenever the queue
    runs dry. `events` may be a lazy iterator such as
    :func:`~streamforge.simulation.iter_stream`, in which case events are
    generated while earlier ones are delivered; an error raised while
    producing is re-raised here.

    Parameters
    ----------
    events : iterable of Event
        Events in arrival order, e.g. a :class:`Stream`.
    sink : eventSink
        Destination; it is not closed.
    rate : float, optional
        Events per second, by default ``None`` (as fast as possible).
    queue_size : int, optional
        Queue capacity, by default 1024.

    Returns
    -------
    DeliveryReport
        Counts of the sink after the last event.

    Raises
    ------
    SinkError
        If the sink fails; the report counts the delivered events.
    """
    if rate is not None and rate <= 0:
        raise ValueError(f"rate must be positive, got {rate}")
    q = queue.Queue(maxsize=queue_size)
    stop = threading.Event()
    errors = []
    producer = threading.Thread(
        target=_produce, args=(events, q, stop, errors), name="sforge-producer",
        daemon=True,
    )
    producer.start()
    start = time.monotonic()
    n = 0
    try:
        while True:
            try:
                event = q.get_nowait()
            except queue.Empty:
                sink.flush()
                event = q.get()
            if event is _DONE:
                break
            if rate is not None:
                delay = start + n / rate - time.monotonic()
                if delay > 0:
                    time.sleep(delay)
            sink.send(event)
            n += 1
            if rate is not None:
                sink.flush()
        sink.flush()
    finally:
        stop.set()
        producer.join()
    if errors:
        raise errors[0]
    logger.debug("Replayed %d events into %r", n, sink)
    return sink.report


def tcp_sink(endpoint, stream, rate=None, suppress_case_ids=False):
    """Deliver `stream` over a TCP connection to `endpoint`.

    Returns
    -------
    DeliveryReport

    Raises
    ------
    SinkError
        On refused or reset connections, with the partial count.
    """
    with tcpSink(endpoint, suppress_case_ids) as sink:
        replay_to_sink(stream, sink, rate)
    return sink.report
