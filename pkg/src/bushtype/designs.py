"""Parameters of the (Siamese) twin symmetric designs obtainable from order-4m^4 Bush matrices.

Only the arithmetic is provided; no design is constructed.
"""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import is_prime_power
from .errors import InvalidKind

KINDS = ("twin", "siamese")


@dataclass(frozen=True)
class DesignParams:
    kind: str
    m: int
    ell: int
    q: int
    q_is_prime_power: bool
    v: int
    k: int
    lam: int

    def lines(self) -> list[str]:
        return [
            f"KIND {self.kind}",
            f"M {self.m}",
            f"ELL {self.ell}",
            f"Q {self.q}",
            f"Q_PRIME_POWER {'yes' if self.q_is_prime_power else 'no'}",
            f"V {self.v}",
            f"K {self.k}",
            f"LAMBDA {self.lam}",
        ]


def design_params(m: int, ell: int, kind: str) -> DesignParams:
    if kind not in KINDS:
        raise InvalidKind(f"kind must be one of {KINDS}, got {kind!r}")
    if m < 1 or m % 2 == 0:
        raise ValueError(f"m must be a positive odd integer, got {m}")
    if ell < 1:
        raise ValueError(f"ell must be a positive integer, got {ell}")
    sign = -1 if kind == "twin" else 1
    q = (2 * m * m + sign) ** 2
    m2, m4 = m * m, m**4
    # (q^(ell+1) - 1)/(q - 1) as a sum, so that q = 1 (twin, m = 1) is covered
    v = 4 * m4 * sum(q**i for i in range(ell + 1))
    k = q**ell * (2 * m4 + sign * m2)
    lam = q**ell * (m4 + sign * m2)
    assert k * (k - 1) == lam * (v - 1), "symmetric design identity failed"
    return DesignParams(kind, m, ell, q, is_prime_power(q), v, k, lam)
