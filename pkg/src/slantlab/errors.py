"""Exception hierarchy shared by every module."""


class SlantLabError(Exception):
    """Base class for all errors raised by slantlab."""


class DomainError(SlantLabError, ValueError):
    """A chart point lies outside the admitted chart domain."""

    def __init__(self, point, reason="outside chart domain"):
        self.point = tuple(float(c) for c in point)
        super().__init__(f"point {self.point}: {reason}")


class DegenerateFrameError(SlantLabError, ValueError):
    def __init__(self, index, residual):
        self.index = index
        self.residual = residual
        super().__init__(
            f"vector {index} is dependent on its predecessors "
            f"(relative residual {residual:.3e})"
        )


class NotPositiveDefiniteError(SlantLabError, ValueError):
    def __init__(self, minor):
        self.minor = minor
        super().__init__(f"leading minor of order {minor} is not positive definite")


class DegenerateImmersionError(SlantLabError, ValueError):
    def __init__(self, point, detail=""):
        self.point = tuple(float(c) for c in point)
        msg = f"immersion is not of full rank at {self.point}"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)


class UncalibratedConventionError(SlantLabError, RuntimeError):
    """The ambient space has no Lee-form convention attached."""


class CalibrationDegenerateError(SlantLabError, ValueError):
    """The conformal factor carries no Lee data at the sample points."""


class CalibrationFailedError(SlantLabError, RuntimeError):
    def __init__(self, residual):
        self.residual = residual
        super().__init__(f"no Lee convention reaches the required residual (best {residual:.3e})")


class NotPointwiseSlantError(SlantLabError, ValueError):
    def __init__(self, defect):
        self.defect = defect
        super().__init__(f"distribution is not pointwise slant (uniformity defect {defect:.3e})")


class NotWarpedProductError(SlantLabError, ValueError):
    def __init__(self, measure, value):
        self.measure = measure
        self.value = value
        super().__init__(f"metric is not a warped product: {measure} = {value:.3e}")


class ImproperPointError(SlantLabError, ValueError):
    """Slant angle too close to 0 or pi/2 for the requested quantity."""


class FrameUndefinedError(ImproperPointError):
    pass


class ModeMismatchError(SlantLabError, ValueError):
    pass


class ScenarioConfigError(SlantLabError, ValueError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path or '<root>'}: {message}")
