"""Exception hierarchy shared by all focklab modules.

Every error carries a stable ``name`` so the CLI can report the originating
failure on stderr without leaking a traceback.
"""

from __future__ import annotations


class FocklabError(Exception):
    """Base class for domain errors (CLI exit code 1)."""

    @property
    def name(self) -> str:
        return type(self).__name__


class ParseError(FocklabError, ValueError):
    def __init__(self, token: str, message: str = "cannot parse"):
        self.token = token
        super().__init__(f"{message}: {token!r}")


class NonpositiveLaplacian(FocklabError):
    def __init__(self, r: float, value: float):
        self.r = r
        self.value = value
        super().__init__(f"Laplacian of the weight is {value!r} at r={r!r}")


class SingularLimit(FocklabError):
    """An r -> 0+ limit diverges and is not fabricated."""


class GridTooShort(FocklabError):
    pass


class NonDecayingTail(FocklabError):
    pass


class ToleranceNotMet(FocklabError):
    pass


class DivergentTail(FocklabError):
    pass


class LipschitzViolation(FocklabError):
    def __init__(self, z: complex, zeta: complex, bound: float):
        self.z = z
        self.zeta = zeta
        super().__init__(
            f"|t(z)-t(zeta)| exceeds {bound} |z-zeta| for z={z!r}, zeta={zeta!r}"
        )


class GridTooCoarse(FocklabError):
    pass


class EigenFailure(FocklabError):
    pass


class TruncationInsufficient(FocklabError):
    pass


class OutOfCaseRange(FocklabError):
    pass


class UndefinedRatio(FocklabError):
    pass
