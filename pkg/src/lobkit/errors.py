"""Exception hierarchy for lobkit."""


class LobkitError(Exception):
    """Base class for every error raised by lobkit."""


# --- book -----------------------------------------------------------------


class BookError(LobkitError):
    pass


class DuplicateOrderId(BookError):
    def __init__(self, order_id):
        super().__init__(f"order id {order_id} is already resting")
        self.order_id = order_id


class UnknownOrderId(BookError):
    def __init__(self, order_id):
        super().__init__(f"order id {order_id} is not resting")
        self.order_id = order_id


class NonPositiveVolume(BookError):
    pass


class NonPositivePrice(BookError):
    pass


class InvalidOrderId(BookError):
    pass


class CancelExceedsVolume(BookError):
    def __init__(self, order_id, requested, resting):
        super().__init__(
            f"cancel of {requested} exceeds resting volume {resting} of order {order_id}"
        )
        self.order_id = order_id


class EmptyOppositeSide(BookError):
    """A market order met an empty opposite side and was discarded whole."""


class OneSidedBook(BookError):
    pass


class InvariantBreach(LobkitError):
    """Internal consistency check failed; indicates a bug, not bad input."""


# --- event stream -----------------------------------------------------------


class EventFormatError(LobkitError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class MalformedLine(EventFormatError):
    pass


class TimeRegression(EventFormatError):
    pass


class UnknownEventKind(EventFormatError):
    pass


class OutOfCalendar(LobkitError):
    pass


class ReplayError(LobkitError):
    def __init__(self, index: int, cause: Exception):
        super().__init__(f"event {index} (line {index + 2}): {cause}")
        self.index = index
        self.lineno = index + 2
        self.cause = cause


# --- analytics / snapshot / flowgen -----------------------------------------


class EmptyBook(LobkitError):
    pass


class InsufficientData(LobkitError):
    pass


class InconsistentPair(LobkitError):
    pass


class EmptyPlan(LobkitError):
    pass


class EmptyWindow(LobkitError):
    pass


class InvalidConfig(LobkitError):
    pass
