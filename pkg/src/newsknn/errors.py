"""Exception hierarchy. Each family carries the CLI exit code it maps to."""


class NewsKNNError(Exception):
    exit_code = 4


class InputError(NewsKNNError):
    """Bad or inconsistent input data (exit code 2)."""

    exit_code = 2


class IngestError(InputError):
    def __init__(self, line_no, message):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class EmptyCorpusError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class DuplicateItemError(InputError):
    def __init__(self, item_id):
        super().__init__(f"duplicate item_id {item_id!r}")
        self.item_id = item_id


class MissingEmbeddingError(InputError):
    def __init__(self, item_ids):
        if isinstance(item_ids, str):
            item_ids = [item_ids]
        self.item_ids = sorted(item_ids)
        shown = ", ".join(self.item_ids[:10])
        more = "" if len(self.item_ids) <= 10 else f" (+{len(self.item_ids) - 10} more)"
        super().__init__(f"no embedding for item(s): {shown}{more}")


class UnknownItemError(InputError):
    def __init__(self, item_id):
        super().__init__(f"item {item_id!r} not in corpus vocabulary")
        self.item_id = item_id


class ZeroVectorError(InputError):
    pass


class ConfigError(InputError):
    pass


class ZeroVarianceError(InputError):
    pass


class ProtocolError(NewsKNNError):
    """Violation of the evaluation protocol (exit code 3)."""

    exit_code = 3


class ShortTimespanError(ProtocolError):
    pass


class LeakageError(ProtocolError):
    pass


class InvariantViolation(NewsKNNError):
    """Internal invariant broken (exit code 4)."""

    exit_code = 4


class StageError(NewsKNNError):
    """Wraps a failure inside an experiment stage with its location."""

    def __init__(self, stage, partition, cause):
        where = f"stage {stage!r}" + ("" if partition is None else f", partition {partition}")
        super().__init__(f"{where}: {cause}")
        self.stage = stage
        self.partition = partition
        self.cause = cause
        self.exit_code = getattr(cause, "exit_code", 4)
