"""Exception hierarchy shared by all modules."""


class WeakSocialError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(WeakSocialError, ValueError):
    """An input object violates one of its invariants.

    Parameters
    ----------
    component : str
        Which part of the input is wrong (``"network"``, ``"likelihoods"``, ...).
    detail : str
        Human-readable description of the first violated condition.
    """

    def __init__(self, component, detail):
        self.component = component
        self.detail = detail
        super().__init__(f"{component}: {detail}")


class NonSquare(ValidationError):
    def __init__(self, shape):
        self.shape = tuple(shape)
        super().__init__("network", f"combination matrix must be square, got shape {self.shape}")


class NegativeEntry(ValidationError):
    def __init__(self, row, col, value, labels=None):
        self.row, self.col, self.value = row, col, value
        r = labels[row] if labels else row
        c = labels[col] if labels else col
        super().__init__("network", f"negative weight {value!r} at ({r}, {c})")


class ColumnSumMismatch(ValidationError):
    """Column ``column`` (0-based) of the combination matrix does not sum to one."""

    def __init__(self, column, total, label=None):
        self.column = column
        self.total = total
        self.label = label if label is not None else str(column + 1)
        super().__init__("network", f"column {self.label} sums to {total:.12g}, expected 1")


class NotWeaklyStructured(WeakSocialError):
    """The graph cannot be split into sending and receiving sub-networks."""


class NoSendingSubnetwork(NotWeaklyStructured):
    pass


class NoConvergence(WeakSocialError):
    def __init__(self, max_iters, residual=None):
        self.max_iters = max_iters
        self.residual = residual
        super().__init__(f"power iteration did not converge in {max_iters} iterations"
                         + (f" (residual {residual:.3e})" if residual is not None else ""))


class NotIrreducible(WeakSocialError):
    pass


class SingularSystem(WeakSocialError):
    pass


class ZeroEvidence(WeakSocialError):
    """The observed signal has zero probability under every state with prior mass."""

    def __init__(self, agent=None, time=None, signal=None):
        self.agent, self.time, self.signal = agent, time, signal
        where = []
        if agent is not None:
            where.append(f"agent {agent}")
        if time is not None:
            where.append(f"time {time}")
        if signal is not None:
            where.append(f"signal {signal}")
        msg = "zero evidence: observed signal is impossible under the current belief"
        super().__init__(msg + (f" ({', '.join(where)})" if where else ""))


class UndefinedRegret(WeakSocialError, ValueError):
    pass


class UndefinedKL(WeakSocialError, ValueError):
    pass


class WindowTooLong(WeakSocialError, ValueError):
    pass


class ParseError(WeakSocialError):
    def __init__(self, line, message):
        self.line = line
        self.message = message
        super().__init__(f"line {line}: {message}" if line is not None else message)
