"""Ensemble parameters, design rates, and the rate-equivocation region."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, fields
from enum import Enum
from typing import Optional

from .errors import (
    DegenerateEnsembleWarning,
    DegreeTooSmall,
    InvalidParams,
    RateOutOfRange,
)

# slack for ceilings of products like (1 - 0.7) * 10 that land a hair above an integer
_CEIL_SLACK = 1e-9


class Variant(str, Enum):
    CHAIN = "chain"
    SMOOTHED = "smoothed"


@dataclass(frozen=True)
class EnsembleParams:
    """Degrees and coupling geometry of a two-edge-type ensemble.

    ``L`` and ``w`` may be left unset for the uncoupled ensemble; ``M`` is only
    needed to sample finite instances.  ``l2 = 0`` is accepted so that a
    degenerate degree selection can still be represented.
    """

    l1: int
    l2: int
    r1: int
    r2: int
    L: Optional[int] = None
    w: Optional[int] = None
    variant: Variant = Variant.SMOOTHED
    M: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if self.l1 < 1 or self.l2 < 0 or self.r1 < 1 or self.r2 < 1:
            raise InvalidParams(f"degrees must be positive: {self}")
        if self.L is not None and self.L < 0:
            raise InvalidParams("L must be nonnegative")
        if self.w is not None and self.w < 1:
            raise InvalidParams("w must be positive")
        if self.M is not None and self.M < 1:
            raise InvalidParams("M must be positive")

    @property
    def n(self) -> int:
        if self.L is None or self.M is None:
            raise InvalidParams("blocklength needs both L and M")
        return self.M * (2 * self.L + 1)


@dataclass(frozen=True)
class WiretapChannelSpec:
    eps_m: float
    eps_w: float

    def __post_init__(self):
        for e in (self.eps_m, self.eps_w):
            if not 0.0 <= e <= 1.0:
                raise InvalidParams(f"erasure probability {e} outside [0, 1]")
        if self.eps_w < self.eps_m:
            raise InvalidParams("wiretapper channel must be degraded: eps_w >= eps_m")

    @property
    def C_m(self) -> float:
        return 1.0 - self.eps_m

    @property
    def C_w(self) -> float:
        return 1.0 - self.eps_w

    @property
    def secrecy_capacity(self) -> float:
        return self.C_m - self.C_w


@dataclass(frozen=True)
class RegionPoint:
    R: float
    Re: float

    def feasible(self, ch: WiretapChannelSpec, tol: float = 1e-12) -> bool:
        return (
            self.Re <= self.R + tol
            and self.R <= ch.C_m + tol
            and -tol <= self.Re <= ch.secrecy_capacity + tol
        )


# ---------------------------------------------------------------------------
# design rates


def _check_coupled(p: EnsembleParams):
    if p.L is None or p.w is None:
        raise InvalidParams("design rate needs L and w")
    if p.w > 2 * p.L:
        raise InvalidParams(f"w={p.w} exceeds 2L={2 * p.L}")


def boundary_term(L: int, w: int, r: int) -> float:
    """(w + 1 - 2 sum_{i=0}^{w} (i/w)^r) / (2L + 1)."""
    s = math.fsum((i / w) ** r for i in range(w + 1))
    return (w + 1 - 2 * s) / (2 * L + 1)


def _type_exponents(p: EnsembleParams, strict: bool) -> tuple[int, int]:
    if strict:
        if p.r1 != p.r2:
            raise InvalidParams("strict mode needs r1 == r2 (single shared exponent)")
        return p.r1, p.r1
    return p.r1, p.r2


def check_fractions(p: EnsembleParams, strict: bool = False) -> tuple[float, float]:
    """Connected check nodes per variable, ``(C1/V, C2/V)``, for the smoothed ensemble."""
    _check_coupled(p)
    e1, e2 = _type_exponents(p, strict)
    a1, a2 = p.l1 / p.r1, p.l2 / p.r2
    return a1 * (1 + boundary_term(p.L, p.w, e1)), a2 * (1 + boundary_term(p.L, p.w, e2))


def design_rate_total(p: EnsembleParams, strict: bool = False) -> float:
    """Design rate 1 - C1/V - C2/V of the full two-edge code.

    By default the boundary sum uses each type's own check degree; with
    ``strict=True`` a single exponent is used and ``r1 == r2`` is required.
    """
    if p.variant is not Variant.SMOOTHED:
        raise InvalidParams("design_rate_total applies to the smoothed variant")
    c1, c2 = check_fractions(p, strict)
    return 1.0 - c1 - c2


def design_rate_wiretap(p: EnsembleParams, strict: bool = False) -> float:
    """Coset-scheme design rate C2/V (type-2 checks per variable)."""
    if p.variant is not Variant.SMOOTHED:
        raise InvalidParams("design_rate_wiretap applies to the smoothed variant")
    return check_fractions(p, strict)[1]


def chain_span(l: int) -> int:
    """Half-width s of the symmetric check span i-s..i+s of a chain variable."""
    if l % 2 == 0:
        raise InvalidParams(f"chain variant needs odd degrees, got {l}")
    return (l - 1) // 2


def check_chain_degrees(p: EnsembleParams):
    if p.variant is not Variant.CHAIN:
        raise InvalidParams("expected the chain variant")
    if p.L is None:
        raise InvalidParams("chain ensemble needs L")
    for l, r in ((p.l1, p.r1), (p.l2, p.r2)):
        chain_span(l)
        if r % l:
            raise InvalidParams(f"chain variant needs l | r, got l={l}, r={r}")


def nominal_rate_chain(p: EnsembleParams) -> float:
    """C2/V of the chain: (l2/r2) * (2L + l2) / (2L + 1).

    Type-2 checks occupy 2L + l2 positions, M*l2/r2 per position, all of them
    connected; the 2L + 1 variable positions hold M variables each.
    """
    check_chain_degrees(p)
    return (p.l2 / p.r2) * (2 * p.L + p.l2) / (2 * p.L + 1)


def nominal_total_rate_chain(p: EnsembleParams) -> float:
    check_chain_degrees(p)
    c1 = (p.l1 / p.r1) * (2 * p.L + p.l1) / (2 * p.L + 1)
    return 1.0 - c1 - nominal_rate_chain(p)


# ---------------------------------------------------------------------------
# degree selection


def _ceil(x: float) -> int:
    return math.ceil(x - _CEIL_SLACK)


def _require_l1(l1: int):
    if l1 < 3:
        raise DegreeTooSmall(f"type-1 variable degree {l1} < 3")


def select_degrees_secrecy(ch: WiretapChannelSpec, R: float, r: int) -> EnsembleParams:
    """Degrees for the perfect-secrecy branch, 0 < R <= C_m - C_w.

    l1 = ceil((1 - C_w - R) r) and l2 = ceil((1 - C_w) r) - l1, with both
    check degrees equal to r.  L, w and M are left for the caller to fill in.
    """
    if not 0 < R <= ch.secrecy_capacity + _CEIL_SLACK:
        raise RateOutOfRange(f"R={R} outside (0, {ch.secrecy_capacity}]")
    l1 = _ceil((1 - ch.C_w - R) * r)
    l2 = _ceil((1 - ch.C_w) * r) - l1
    _require_l1(l1)
    if l2 == 0:
        warnings.warn(
            f"l2 = 0 for R={R}, r={r}: no secret bits; increase r",
            DegenerateEnsembleWarning, stacklevel=2,
        )
    return EnsembleParams(l1, l2, r, r)


def select_degrees_high_rate(ch: WiretapChannelSpec, R: float, r: int) -> EnsembleParams:
    """Degrees for C_m - C_w < R <= C_m: l1 = ceil((1 - C_m) r), l2 = ceil(R r).

    The equivocation target on this branch is C_m - C_w.
    """
    if not ch.secrecy_capacity + _CEIL_SLACK < R <= ch.C_m + _CEIL_SLACK:
        raise RateOutOfRange(f"R={R} outside ({ch.secrecy_capacity}, {ch.C_m}]")
    l1 = _ceil((1 - ch.C_m) * r)
    l2 = _ceil(R * r)
    _require_l1(l1)
    return EnsembleParams(l1, l2, r, r)


# ---------------------------------------------------------------------------
# region


def region_corners(ch: WiretapChannelSpec) -> tuple[RegionPoint, RegionPoint, RegionPoint]:
    cs = ch.secrecy_capacity
    return RegionPoint(0.0, 0.0), RegionPoint(cs, cs), RegionPoint(ch.C_m, cs)


def region_boundary(ch: WiretapChannelSpec, samples: int) -> list[RegionPoint]:
    """Upper boundary A -> B -> C sampled at ``samples`` rates, corner B included."""
    if samples < 2:
        raise InvalidParams("samples must be >= 2")
    cs = ch.secrecy_capacity
    rates = {ch.C_m * k / (samples - 1) for k in range(samples)}
    rates.add(cs)
    return [RegionPoint(R, min(R, cs)) for R in sorted(rates)]


# ---------------------------------------------------------------------------
# flat key=value config

CONFIG_KEYS = ("l1", "l2", "r1", "r2", "L", "w", "M", "variant", "eps_m", "eps_w")


def dump_config(p: EnsembleParams, ch: Optional[WiretapChannelSpec] = None) -> str:
    lines = []
    for f in fields(p):
        v = getattr(p, f.name)
        if v is None:
            continue
        lines.append(f"{f.name}={v.value if isinstance(v, Variant) else v}")
    if ch is not None:
        lines.append(f"eps_m={ch.eps_m!r}")
        lines.append(f"eps_w={ch.eps_w!r}")
    return "\n".join(lines) + "\n"


def load_config(text: str) -> tuple[EnsembleParams, Optional[WiretapChannelSpec]]:
    raw: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParams(f"line {lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in CONFIG_KEYS:
            raise InvalidParams(f"line {lineno}: unknown key {key!r}")
        raw[key] = value
    kw = {k: int(raw[k]) for k in ("l1", "l2", "r1", "r2", "L", "w", "M") if k in raw}
    if "variant" in raw:
        kw["variant"] = Variant(raw["variant"])
    p = EnsembleParams(**kw)
    ch = None
    if "eps_m" in raw or "eps_w" in raw:
        ch = WiretapChannelSpec(float(raw["eps_m"]), float(raw["eps_w"]))
    return p, ch
