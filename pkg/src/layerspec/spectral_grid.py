"""Two-index eigenvalue grid over cross-section modes, with sector labels."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import UnsupportedCrossSection
from .fiber import spectrum_in_range, theta_at_H
from .profile import CelerityProfile, WellInterval

__all__ = [
    "CrossSection",
    "cross_section_modes",
    "parse_cross_section",
    "SectorLabel",
    "classify",
    "first_nonguided_index",
    "SpectrumRow",
    "enumerate_spectrum",
    "spectrum_csv_rows",
    "extend_modes",
]

GUIDED = "Guided"
NONGUIDED = "NonGuided"
RESIDUAL = "Residual"


@dataclass(frozen=True)
class CrossSection:
    """Dirichlet Laplacian modes on an interval or box, sorted by mu^2."""

    kind: str
    lengths: tuple[float, ...]
    mu2: np.ndarray
    indices: tuple[tuple[int, ...], ...]

    @property
    def mu(self) -> np.ndarray:
        return np.sqrt(self.mu2)

    @property
    def K(self) -> int:
        return self.mu2.size

    def window_fraction(self, k: int, window) -> float:
        """Integral of phi_k^2 over a sub-interval/sub-box (phi_k normalized)."""
        frac = 1.0
        for n, L, (a, b) in zip(self.indices[k - 1], self.lengths, window):
            w = n * math.pi / L
            # (2/L) * integral of sin^2(w x) over (a, b)
            frac *= (2.0 / L) * ((b - a) / 2 - (math.sin(2 * w * b) - math.sin(2 * w * a)) / (4 * w))
        return frac


def cross_section_modes(spec, K_max: int) -> CrossSection:
    """First ``K_max`` modes for ``('interval', L)`` or ``('box', (L1, ..., Ld))``."""
    kind, lengths = _normalize_spec(spec)
    if K_max < 1:
        raise ValueError("K_max must be >= 1")
    if kind == "interval":
        L = lengths[0]
        idx = tuple((k,) for k in range(1, K_max + 1))
        mu2 = np.array([(k * math.pi / L) ** 2 for k in range(1, K_max + 1)])
        return CrossSection(kind, lengths, mu2, idx)
    # each index is at most K_max, which is enough to contain the K_max smallest sums
    freqs = [np.arange(1, K_max + 1) * math.pi / L for L in lengths]
    cands = []
    for combo in itertools.product(range(1, K_max + 1), repeat=len(lengths)):
        m2 = sum(freqs[d][n - 1] ** 2 for d, n in enumerate(combo))
        cands.append((m2, combo))
    cands.sort()
    cands = cands[:K_max]
    return CrossSection(kind, lengths, np.array([m for m, _ in cands]), tuple(c for _, c in cands))


def _normalize_spec(spec):
    if isinstance(spec, CrossSection):
        return spec.kind, spec.lengths
    try:
        kind, lengths = spec
    except (TypeError, ValueError) as exc:
        raise UnsupportedCrossSection(f"cannot interpret cross-section {spec!r}") from exc
    lengths = (float(lengths),) if np.isscalar(lengths) else tuple(float(v) for v in lengths)
    if kind not in ("interval", "box"):
        raise UnsupportedCrossSection(f"unsupported cross-section kind {kind!r}")
    if kind == "interval" and len(lengths) != 1:
        raise UnsupportedCrossSection("interval takes a single length")
    if not lengths or any(not (L > 0 and math.isfinite(L)) for L in lengths):
        raise UnsupportedCrossSection("lengths must be positive")
    return kind, lengths


def _parse_length(tok: str) -> float:
    tok = tok.strip().lower()
    if tok in ("pi", "π"):
        return math.pi
    for suffix in ("*pi", "pi"):
        if tok.endswith(suffix):
            head = tok[: -len(suffix)].rstrip("*")
            return float(head) * math.pi
    if tok.startswith("pi/"):
        return math.pi / float(tok[3:])
    return float(tok)


def parse_cross_section(text: str):
    """Parse ``interval:<L>`` or ``box:<L1>,<L2>[,...]`` (``pi`` allowed)."""
    try:
        kind, rest = text.split(":", 1)
        lengths = tuple(_parse_length(t) for t in rest.split(","))
    except ValueError as exc:
        raise UnsupportedCrossSection(f"cannot parse cross-section {text!r}") from exc
    kind = kind.strip().lower()
    return _normalize_spec((kind, lengths[0] if kind == "interval" and len(lengths) == 1 else lengths))


@dataclass(frozen=True)
class SectorLabel:
    tag: str
    eps: float | None = None
    c1: float | None = None
    ell0: int | None = None

    def __str__(self) -> str:
        return self.tag


def first_nonguided_index(profile: CelerityProfile, mu: float, eps: float) -> int:
    """ell_0: the first ell with beta_{k,ell} >= (c_M + eps) mu^2."""
    lam0 = (profile.c_max + eps) * mu * mu
    th = theta_at_H(profile, mu, lam0)
    n = math.floor(th / math.pi)
    # an eigenvalue exactly at lam0 belongs to the sector (closed side)
    if n >= 1 and abs(th - n * math.pi) <= 1e-12 * max(1.0, th):
        return n
    return n + 1


def classify(profile: CelerityProfile, mu: float, lam: float, eps: float,
             well: WellInterval | None = None, ell0: int | None = None) -> SectorLabel:
    if not eps > 0:
        raise ValueError("eps must be positive")
    mu2 = mu * mu
    if lam >= (profile.c_max + eps) * mu2:
        if ell0 is None:
            ell0 = first_nonguided_index(profile, mu, eps)
        return SectorLabel(NONGUIDED, eps=eps, ell0=ell0)
    if well is not None and profile.c_min * mu2 <= lam <= (well.c1 - eps) * mu2:
        return SectorLabel(GUIDED, eps=eps, c1=well.c1)
    return SectorLabel(RESIDUAL, eps=eps)


@dataclass(frozen=True)
class SpectrumRow:
    k: int
    mu: float
    ell: int
    lam: float
    sector: SectorLabel | None


def enumerate_spectrum(profile: CelerityProfile, cross: CrossSection, lambda_max: float,
                       eps: float | None = None, well: WellInterval | None = None) -> list[SpectrumRow]:
    """Every beta_{k,ell} <= lambda_max over the modes of ``cross``, sorted by (lam, k).

    ``cross`` must contain enough modes; the mode list is extended
    automatically until c_m mu_k^2 exceeds lambda_max.
    """
    cross = extend_modes(profile, cross, lambda_max)
    rows: list[SpectrumRow] = []
    for k, m2 in enumerate(cross.mu2, start=1):
        if profile.c_min * m2 > lambda_max:
            break
        mu = math.sqrt(m2)
        ell0 = first_nonguided_index(profile, mu, eps) if eps is not None else None
        for ell, lam in spectrum_in_range(profile, mu, 0.0, lambda_max):
            label = classify(profile, mu, lam, eps, well, ell0) if eps is not None else None
            rows.append(SpectrumRow(k, mu, ell, lam, label))
    rows.sort(key=lambda r: (r.lam, r.k))
    return rows


def extend_modes(profile, cross: CrossSection, lambda_max: float) -> CrossSection:
    """Grow the mode list until c_m mu_K^2 exceeds lambda_max."""
    K = cross.K
    while profile.c_min * cross.mu2[-1] <= lambda_max:
        K *= 2
        cross = cross_section_modes((cross.kind, cross.lengths), K)
    return cross


def spectrum_csv_rows(rows: list[SpectrumRow]) -> list[list]:
    return [[r.k, r.mu, r.ell, r.lam, str(r.sector) if r.sector is not None else ""] for r in rows]
