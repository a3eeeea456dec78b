from .eventSink import eventSink


class fileSink(eventSink):
    """Sink writing a JSON-lines stream file.

    Parameters
    ----------
    path : str or path-like
        Output file, truncated on open.
    suppress_case_ids : bool, optional
        Whether to omit case identifiers, by default ``False``.
    """
    def __init__(self, path, suppress_case_ids=False):
        self.path = path
        self._file = open(path, "wb")
        super().__init__(suppress_case_ids)

    def __write__(self, data):
        self._file.write(data)

    def __flush__(self):
        self._file.flush()

    def __close__(self):
        self._file.close()

    def __repr__(self):
        return f"fileSink({str(self.path)!r})"
