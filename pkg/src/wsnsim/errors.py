class WSNError(Exception):
    """Base class for simulator errors."""


class TopologyDisconnected(WSNError):
    def __init__(self, unreachable):
        self.unreachable = sorted(unreachable)
        shown = ", ".join(str(i) for i in self.unreachable[:20])
        more = "" if len(self.unreachable) <= 20 else f" (+{len(self.unreachable) - 20} more)"
        super().__init__(f"nodes cannot reach the sink: {shown}{more}")


class NoPathFound(WSNError):
    pass


class FieldOutOfRange(WSNError):
    pass


class TruncatedHeader(WSNError):
    pass


class InvalidPriority(WSNError):
    pass


class InstanceTooLarge(WSNError):
    pass


class ZeroSchedulingRate(WSNError):
    pass


class AlphaOutOfRange(WSNError):
    pass


class NotAdjacent(WSNError):
    pass


class UnknownKey(WSNError):
    pass


class InvalidValue(WSNError):
    pass
