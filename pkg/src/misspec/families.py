"""Parametric families on discretized parameter grids.

Sequences are never enumerated: every family is compressed onto the type
classes of its sufficient statistic, and all probabilities are kept in the
natural-log domain.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

BERNOULLI = "bernoulli"
MARKOV = "markov1-binary"
MARKOV_MAX_N = 64

_MULTI_RE = re.compile(r"^multinomial\((\d+)\)$")


def parse_family(tag: str) -> tuple[str, int]:
    """Split a family tag into (kind, d); d is the simplex dimension."""
    if tag == BERNOULLI:
        return BERNOULLI, 1
    if tag == MARKOV:
        return MARKOV, 2
    m = _MULTI_RE.match(tag)
    if m:
        d = int(m.group(1))
        if not 1 <= d <= 4:
            raise ValueError(f"multinomial dimension must be in 1..4, got {d}")
        return "multinomial", d
    raise ValueError(f"unknown family tag {tag!r}")


def multinomial_tag(d: int) -> str:
    return f"multinomial({d})"


def is_iid(tag: str) -> bool:
    return parse_family(tag)[0] != MARKOV


def _frozen(a) -> np.ndarray:
    a = np.array(a)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class ParamGrid:
    """Discretized model class Phi with a boolean mask marking Theta.

    points has shape (m, p): p = 1 for Bernoulli (probability of a one),
    d + 1 category probabilities for multinomial(d), and (phi01, phi10)
    for the binary first-order Markov family.
    """

    family: str
    points: np.ndarray
    theta_flags: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim == 1:
            pts = pts[:, None]
        flags = np.asarray(self.theta_flags, dtype=bool)
        kind, d = parse_family(self.family)
        if pts.ndim != 2 or len(pts) == 0:
            raise ValueError("grid needs at least one point")
        if flags.shape != (len(pts),):
            raise ValueError("theta_flags must have one entry per point")
        width = {BERNOULLI: 1, MARKOV: 2}.get(kind, d + 1)
        if pts.shape[1] != width:
            raise ValueError(f"{self.family} points need {width} components")
        if np.any(pts < 0) or np.any(pts > 1) or not np.all(np.isfinite(pts)):
            raise ValueError("parameter components must lie in [0, 1]")
        if kind == "multinomial" and np.any(np.abs(pts.sum(1) - 1) > 1e-9):
            raise ValueError("multinomial points must sum to 1")
        for a, b in zip(pts[:-1], pts[1:]):
            if tuple(a) >= tuple(b):
                raise ValueError("points must be strictly increasing (lexicographic)")
        object.__setattr__(self, "points", _frozen(pts))
        object.__setattr__(self, "theta_flags", _frozen(flags))

    def __len__(self) -> int:
        return len(self.points)

    @property
    def values(self) -> np.ndarray:
        """Bernoulli convenience: the 1-d array of success probabilities."""
        if self.points.shape[1] != 1:
            raise ValueError("values is only defined for scalar families")
        return self.points[:, 0]

    @property
    def n_theta(self) -> int:
        return int(self.theta_flags.sum())

    def subgrid(self, mask, all_theta: bool = True) -> "ParamGrid":
        """Grid restricted to mask; every kept point is flagged if all_theta."""
        mask = np.asarray(mask, dtype=bool)
        flags = np.ones(mask.sum(), bool) if all_theta else self.theta_flags[mask]
        return ParamGrid(self.family, self.points[mask], flags)

    def theta_grid(self) -> "ParamGrid":
        return self.subgrid(self.theta_flags)

    def with_flags(self, flags) -> "ParamGrid":
        return ParamGrid(self.family, self.points, flags)

    def category_probs(self) -> np.ndarray:
        """(m, categories) symbol probabilities for i.i.d. families."""
        kind, _ = parse_family(self.family)
        if kind == BERNOULLI:
            p = self.points[:, 0]
            return np.stack([1 - p, p], axis=1)
        if kind == MARKOV:
            raise ValueError("Markov points have no single symbol distribution")
        return np.asarray(self.points)


def build_bernoulli_grid(lo: float, hi: float, m: int,
                         theta_lo: float, theta_hi: float) -> ParamGrid:
    """Uniform Bernoulli grid on [lo, hi] with Theta = [theta_lo, theta_hi].

    The four interval endpoints are placed exactly on the grid by moving the
    nearest uniform node onto each of them.
    """
    if not (0 <= lo <= theta_lo <= theta_hi <= hi <= 1):
        raise ValueError("need 0 <= lo <= theta_lo <= theta_hi <= hi <= 1")
    if m < 2:
        raise ValueError("m must be at least 2")
    if lo == hi:
        raise ValueError("degenerate interval lo == hi; use a one-point grid")
    pts = np.linspace(lo, hi, m)
    step = (hi - lo) / (m - 1)
    placed: dict[int, float] = {}
    for anchor in (lo, hi, theta_lo, theta_hi):
        i = int(round((anchor - lo) / step))
        if i in placed and placed[i] != anchor:
            raise ValueError(f"m={m} too small to hold all interval endpoints")
        placed[i] = anchor
        pts[i] = anchor
    if np.any(np.diff(pts) <= 0):
        raise ValueError(f"m={m} too small to hold all interval endpoints")
    flags = (pts >= theta_lo) & (pts <= theta_hi)
    return ParamGrid(BERNOULLI, pts, flags)


def bernoulli_points(values: Sequence[float], theta_mask=None) -> ParamGrid:
    """Bernoulli grid from explicit values (sorted internally)."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="stable")
    flags = np.ones(len(v), bool) if theta_mask is None else np.asarray(theta_mask, bool)[order]
    return ParamGrid(BERNOULLI, v[order], flags)


def _compositions(n: int, parts: int) -> np.ndarray:
    """All nonnegative integer vectors of length parts summing to n, lexicographic."""
    if parts == 1:
        return np.array([[n]], dtype=np.int64)
    rows = []
    for first in range(n + 1):
        rest = _compositions(n - first, parts - 1)
        rows.append(np.hstack([np.full((len(rest), 1), first), rest]))
    return np.vstack(rows)


def build_multinomial_grid(d: int, resolution: int,
                           theta_support: Sequence[int] | None = None) -> ParamGrid:
    """Simplex lattice {c / resolution} over d + 1 categories.

    Theta is the face of the simplex whose mass sits on theta_support (all
    categories by default, i.e. the well-specified full simplex).
    """
    parse_family(multinomial_tag(d))
    if resolution < 1:
        raise ValueError("resolution must be positive")
    pts = _compositions(resolution, d + 1) / resolution
    if theta_support is None:
        flags = np.ones(len(pts), bool)
    else:
        support = sorted(set(int(s) for s in theta_support))
        if not support or support[0] < 0 or support[-1] > d:
            raise ValueError("theta_support must list categories in 0..d")
        outside = [c for c in range(d + 1) if c not in support]
        flags = np.all(pts[:, outside] == 0, axis=1) if outside else np.ones(len(pts), bool)
    return ParamGrid(multinomial_tag(d), pts, flags)


def build_markov_grid(m: int, theta_lo: float = 0.0, theta_hi: float = 1.0) -> ParamGrid:
    """Lattice on (phi01, phi10) in [0,1]^2 without the non-ergodic corner.

    Theta is the memoryless subfamily phi01 + phi10 = 1 (so P(1|0) = P(1|1))
    with success probability phi01 in [theta_lo, theta_hi].
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    if not 0 <= theta_lo <= theta_hi <= 1:
        raise ValueError("need 0 <= theta_lo <= theta_hi <= 1")
    ax = np.linspace(0, 1, m)
    pts = np.array([(a, b) for a in ax for b in ax if a + b > 0])
    iid = np.isclose(pts[:, 0] + pts[:, 1], 1.0, atol=1e-12)
    flags = iid & (pts[:, 0] >= theta_lo - 1e-12) & (pts[:, 0] <= theta_hi + 1e-12)
    return ParamGrid(MARKOV, pts, flags)


class TypeClass(NamedTuple):
    stat: tuple
    log_multiplicity: float


@dataclass(frozen=True)
class ClassList:
    """Exhaustive list of type classes of length-n sequences.

    stats rows are k (Bernoulli), category counts (multinomial) or
    (y1, n01, n10, n11) for the binary Markov family.
    """

    family: str
    n: int
    stats: np.ndarray
    log_mult: np.ndarray
    _index: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "stats", _frozen(self.stats))
        object.__setattr__(self, "log_mult", _frozen(self.log_mult))

    def __len__(self) -> int:
        return len(self.stats)

    def __getitem__(self, i: int) -> TypeClass:
        return TypeClass(tuple(int(s) for s in self.stats[i]), float(self.log_mult[i]))

    def __iter__(self) -> Iterator[TypeClass]:
        return (self[i] for i in range(len(self)))

    def index(self, stat) -> int:
        if not self._index:
            self._index.update({tuple(int(s) for s in row): i for i, row in enumerate(self.stats)})
        return self._index[tuple(int(s) for s in stat)]

    def category_counts(self) -> np.ndarray:
        """(K, categories) symbol counts for i.i.d. families."""
        kind, _ = parse_family(self.family)
        if kind == BERNOULLI:
            k = self.stats[:, 0]
            return np.stack([self.n - k, k], axis=1)
        if kind == MARKOV:
            raise ValueError("Markov classes have no symbol-count form")
        return np.asarray(self.stats)


def _markov_counts(n: int) -> dict[tuple[int, int, int, int], int]:
    """Number of binary strings per (y1, n01, n10, n11) by dynamic programming."""
    # state: (y1, last, n01, n10, n11) -> count
    states = {(y, y, 0, 0, 0): 1 for y in (0, 1)}
    for _ in range(n - 1):
        nxt: dict = {}
        for (y1, last, a, b, c), cnt in states.items():
            for y in (0, 1):
                if last == 0:
                    key = (y1, y, a + y, b, c)
                else:
                    key = (y1, y, a, b + (1 - y), c + y)
                nxt[key] = nxt.get(key, 0) + cnt
        states = nxt
    out: dict = {}
    for (y1, _last, a, b, c), cnt in states.items():
        out[(y1, a, b, c)] = out.get((y1, a, b, c), 0) + cnt
    return out


def type_classes(family: str, n: int) -> ClassList:
    """Type classes of length-n sequences with natural-log multiplicities."""
    kind, d = parse_family(family)
    if n < 1:
        raise ValueError("n must be at least 1")
    if kind == BERNOULLI:
        k = np.arange(n + 1)
        lm = gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1)
        return ClassList(family, n, k[:, None], lm)
    if kind == MARKOV:
        if n > MARKOV_MAX_N:
            raise ValueError(f"markov1-binary type classes need n <= {MARKOV_MAX_N}")
        counts = _markov_counts(n)
        keys = sorted(counts)
        lm = np.array([np.log(float(counts[k])) for k in keys])
        return ClassList(family, n, np.array(keys, dtype=np.int64), lm)
    comp = _compositions(n, d + 1)
    lm = gammaln(n + 1) - gammaln(comp + 1).sum(axis=1)
    return ClassList(family, n, comp, lm)


def _xlogy_table(counts: np.ndarray, probs: np.ndarray) -> np.ndarray:
    """counts @ log(probs).T with 0 log 0 = 0; -inf where a zero prob is hit."""
    with np.errstate(divide="ignore"):
        logp = np.where(probs > 0, np.log(np.where(probs > 0, probs, 1.0)), 0.0)
    out = logp @ counts.T
    hit = ((probs == 0).astype(float) @ (counts > 0).T.astype(float)) > 0
    return np.where(hit, -np.inf, out)


def stationary_one(phi01: float, phi10: float) -> float:
    s = phi01 + phi10
    if s <= 0:
        raise ValueError("non-ergodic Markov parameter (phi01 + phi10 = 0)")
    return phi01 / s


def log_prob_table(grid: ParamGrid, classes: ClassList) -> np.ndarray:
    """(points, classes) natural-log probability of one sequence per class."""
    if grid.family != classes.family:
        raise ValueError("grid and class list belong to different families")
    kind, _ = parse_family(grid.family)
    if kind != MARKOV:
        return _xlogy_table(classes.category_counts(), grid.category_probs())
    p01, p10 = grid.points[:, 0], grid.points[:, 1]
    if np.any(p01 + p10 <= 0):
        raise ValueError("non-ergodic Markov parameter (phi01 + phi10 = 0)")
    mu1 = p01 / (p01 + p10)
    st = classes.stats
    y1, n01, n10, n11 = st[:, 0], st[:, 1], st[:, 2], st[:, 3]
    n00 = classes.n - 1 - n01 - n10 - n11
    # columns: 1-mu1, mu1, 1-p01, p01, p10, 1-p10
    probs = np.stack([1 - mu1, mu1, 1 - p01, p01, p10, 1 - p10], axis=1)
    counts = np.stack([1 - y1, y1, n00, n01, n10, n11], axis=1)
    return _xlogy_table(counts, probs)


@dataclass(frozen=True)
class SequenceLaw:
    n: int
    class_log_prob: np.ndarray
    classes: ClassList

    def __post_init__(self):
        object.__setattr__(self, "class_log_prob", _frozen(self.class_log_prob))

    def class_mass(self) -> np.ndarray:
        """Total probability of each class."""
        return np.exp(self.classes.log_mult + self.class_log_prob)

    def total(self) -> float:
        return float(np.exp(logsumexp(self.classes.log_mult + self.class_log_prob)))


def sequence_law(param, classes: ClassList, n: int | None = None) -> SequenceLaw:
    """Law of a length-n sequence under one parameter, per type class."""
    if n is not None and n != classes.n:
        raise ValueError("n does not match the class list")
    p = np.atleast_1d(np.asarray(param, dtype=float))
    kind, d = parse_family(classes.family)
    if kind == MARKOV:
        if p.shape != (2,):
            raise ValueError("Markov parameter is (phi01, phi10)")
        stationary_one(p[0], p[1])
    elif kind == "multinomial" and p.shape != (d + 1,):
        raise ValueError(f"multinomial({d}) parameter needs {d + 1} components")
    elif kind == BERNOULLI and p.shape != (1,):
        raise ValueError("Bernoulli parameter is a single probability")
    row = p[None, :]
    if kind == "multinomial":
        if abs(row.sum() - 1) > 1e-9 or np.any(row < 0):
            raise ValueError("multinomial parameter must be a probability vector")
    grid_like = ParamGrid(classes.family, row, [True])
    return SequenceLaw(classes.n, log_prob_table(grid_like, classes)[0], classes)


def conditional_predictive_weight(prior, grid: ParamGrid, k: int, n: int) -> float:
    """Mixture probability that the n-th symbol is a one given k ones in n - 1.

    prior is a Prior or a weight vector over a Bernoulli grid.
    """
    if parse_family(grid.family)[0] != BERNOULLI:
        raise ValueError("predictive weights are defined for Bernoulli grids")
    if not 0 <= k <= n - 1:
        raise ValueError("need 0 <= k <= n - 1")
    w = np.asarray(getattr(prior, "weights", prior), dtype=float)
    if w.shape != (len(grid),):
        raise ValueError("prior does not match the grid")
    th = grid.values
    with np.errstate(divide="ignore"):
        lw = np.log(w)
    counts_num = np.array([[n - 1 - k, k + 1]])
    counts_den = np.array([[n - 1 - k, k]])
    probs = np.stack([1 - th, th], axis=1)
    num = logsumexp(lw + _xlogy_table(counts_num, probs)[:, 0])
    den = logsumexp(lw + _xlogy_table(counts_den, probs)[:, 0])
    if not np.isfinite(den):
        raise ValueError("prior puts no mass on parameters explaining the history")
    return float(min(1.0, np.exp(num - den)))


def enumerate_sequences(alphabet: int, n: int) -> Iterator[tuple[int, ...]]:
    """All alphabet**n sequences; only meant for brute-force checks at small n."""
    return itertools.product(range(alphabet), repeat=n)
