"""Exception types raised by fastqz."""


class StructureError(ValueError):
    """Generator dimensions, windows or streams do not fit together."""


class CompressionError(ValueError):
    """A generator block has numerical rank above the requested order.

    Args:
        index (int): position k of the offending block
        singular_value (float): first singular value above the target
    """

    def __init__(self, index: int, singular_value: float, target: int):
        self.index = index
        self.singular_value = singular_value
        self.target = target
        super().__init__(
            f"Block {index} has rank above {target}: "
            f"singular value {singular_value:.3e} exceeds tolerance"
        )


class NumericalFailure(RuntimeError):
    """A sweep produced a non-finite value or failed a dense cross-check."""

    def __init__(self, message: str, sweep: int = -1, step: int = -1):
        self.sweep = sweep
        self.step = step
        self.reason = message
        if sweep >= 0 or step >= 0:
            message = f"{message} (sweep {sweep}, step {step})"
        super().__init__(message)
