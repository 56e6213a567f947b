class QbicError(Exception):
    pass


class BandDomainError(QbicError, ValueError):
    """
    Exception for energies evaluated outside the band of a channel.
    """

    def __init__(self, channel, energy: float, edges: tuple[float, float]):
        self.channel = channel
        self.energy = energy
        self.edges = edges
        super().__init__(
            f"energy {energy} is outside the {channel} channel band "
            f"({edges[0]}, {edges[1]})"
        )


class ConvergenceError(QbicError):
    """
    Exception for iterations that did not reach the requested tolerance.
    Carries the best iterate found and its residual.
    """

    def __init__(self, message: str, best=None, residual=None):
        self.best = best
        self.residual = residual
        super().__init__(message)


class ClassificationError(QbicError):
    pass


class SpuriousRootError(ClassificationError):
    """
    No branch combination satisfies the dispersion equation at the root.
    """

    def __init__(self, energy: complex, residuals: dict):
        self.energy = energy
        self.residuals = residuals
        formatted = ", ".join(f"{k}: {v:.3e}" for k, v in residuals.items())
        super().__init__(
            f"spurious or misconverged root at z={energy}; branch residuals {formatted}"
        )


class OnCutError(ClassificationError):
    """
    A wave number lies on the real axis so the sheet cannot be read from the
    sign of its imaginary part. Carries the best candidate wave numbers.
    """

    def __init__(self, energy: complex, channel, k_plus: complex, k_minus: complex):
        self.energy = energy
        self.channel = channel
        self.k_plus = k_plus
        self.k_minus = k_minus
        super().__init__(
            f"root z={energy} lies on the {channel} channel cut "
            f"(K+={k_plus}, K-={k_minus}); assign the sheet manually"
        )


class NearCutError(QbicError):
    """
    Newton refinement crossed a branch cut. Carries the last iterate that was
    still on the original sheet.
    """

    def __init__(self, message: str, last_state=None):
        self.last_state = last_state
        super().__init__(message)


class SpectrumStructureError(QbicError):
    pass


class EdgeStateError(QbicError):
    pass


class IntegratorError(QbicError):
    def __init__(self, message: str, drift: float):
        self.drift = drift
        super().__init__(message)


class TrackingError(QbicError):
    """
    Exception for eigenvalue tracks that cannot be continued across a grid step.
    """

    def __init__(self, message: str, param_value: float, track_id=None, records=None):
        self.param_value = param_value
        self.track_id = track_id
        self.records = records or []
        super().__init__(message)


class QbicWarning(Warning):
    pass


class HorizonWarning(QbicWarning):
    pass


class FitQualityWarning(QbicWarning):
    pass
