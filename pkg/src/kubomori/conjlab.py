"""Randomized evidence for the maximal-mixing conjecture.

The conjecture: the scalar curvature of the trace-one slice is largest at
the uniform spectrum and is monotone along the majorization order, more
mixed meaning larger. Here the scalar curvature is taken with the usual
sign (sum of sectional curvatures), which is minus the double sum
``sum_{t,s} G(R1(A_t,A_s)A_t,A_s)`` computed by :mod:`kubomori.closedform`.

Tested direction: if ``a`` majorizes ``b`` then ``kappa(a) <= kappa(b)``.
A violation is report content, never an exception.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .closedform import scal1_closed
from .curvature import Method
from .matcore import DomainError, Spectrum
from .oracle import scal1_oracle

MIN_COMPONENT = 1e-6
MAJORIZE_SLACK = 1e-12
MONOTONE_RTOL = 1e-9
MIXED_ATOL = 1e-9
NEIGHBOR_WINDOW = 4

RNG_ALGORITHM = "numpy Philox4x64-10 seeded through SeedSequence(seed); spawn(2): samples, random pairs"
DIRECTION = "a majorizes b => scal1(a) <= scal1(b); maximum expected at the uniform spectrum"
SIGN_CONVENTION = ("scal1 = sum of sectional curvatures = "
                   "-sum_{t,s} G(R1(A_t,A_s)A_t,A_s) over a G-orthonormal basis of the slice")

METHODS = {"closed": Method.CLOSED_FORM, "oracle": Method.ORACLE}


def make_rng(seed: int) -> tuple[np.random.Generator, np.random.Generator]:
    """Independent generators for spectra and for random comparison pairs."""
    a, b = np.random.SeedSequence(seed).spawn(2)
    return np.random.Generator(np.random.Philox(a)), np.random.Generator(np.random.Philox(b))


def sample_spectrum(n: int, rng: np.random.Generator) -> Spectrum:
    """Uniform draw from the open simplex, sorted descending, all components >= 1e-6."""
    if n < 2:
        raise DomainError("n must be at least 2")
    while True:
        e = rng.exponential(size=n)
        lam = e / e.sum()
        if lam.min() >= MIN_COMPONENT:
            return Spectrum(lam)


def _values(s) -> np.ndarray:
    return s.values if isinstance(s, Spectrum) else np.sort(np.asarray(s, dtype=float))[::-1]


def majorizes(a, b) -> bool:
    """True iff every leading partial sum of ``a`` is at least that of ``b`` (slack 1e-12)."""
    x, y = _values(a), _values(b)
    if x.shape != y.shape:
        raise DomainError(f"dimension mismatch: {x.size} vs {y.size}")
    return bool(np.all(np.cumsum(x)[:-1] >= np.cumsum(y)[:-1] - MAJORIZE_SLACK))


def curvature(s, method: str = "closed") -> float:
    """Scalar curvature of the slice at a trace-one spectrum, usual sign."""
    lam = _values(s)
    # adding 0.0 turns -0.0 into 0.0
    if method == "closed":
        return 0.0 - scal1_closed(Spectrum(lam)).total
    if method == "oracle":
        return 0.0 - scal1_oracle(np.diag(lam)).value
    raise DomainError(f"unknown method {method!r}")


def _evaluate(job):
    lam, method = job
    try:
        v = curvature(lam, method)
        if not math.isfinite(v):
            return math.nan, "non-finite curvature"
        return v, None
    except (ArithmeticError, ValueError) as exc:
        return math.nan, f"{type(exc).__name__}: {exc}"


def worker_count() -> int:
    env = os.environ.get("KUBOMORI_THREADS")
    if env:
        try:
            k = int(env)
        except ValueError:
            raise DomainError(f"KUBOMORI_THREADS must be an integer, got {env!r}") from None
        if k < 1:
            raise DomainError("KUBOMORI_THREADS must be at least 1")
        return k
    return os.cpu_count() or 1


def _evaluate_all(spectra, method: str, workers: int | None = None) -> list:
    jobs = [(s.values, method) for s in spectra]
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(jobs) < 64:
        return [_evaluate(j) for j in jobs]
    # map preserves submission order, so the reduction below is by sample index
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (8 * workers))))


@dataclass(frozen=True)
class ScanRecord:
    index: int
    spectrum: Spectrum
    scal1: float
    method: str
    seed: int
    majorizes_partner: int | None = None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None and math.isfinite(self.scal1)


@dataclass(frozen=True)
class ScanReport:
    n: int
    samples: int
    rng_seed: int
    method: str
    scal1_at_mixed: float
    max_observed: float
    records: tuple
    violations: tuple
    comparisons: int
    failures: tuple = field(default=())

    @property
    def mixed_is_max(self) -> bool:
        return self.max_observed <= self.scal1_at_mixed + MIXED_ATOL

    @property
    def header(self) -> dict:
        return {"direction": DIRECTION, "sign_convention": SIGN_CONVENTION, "rng": RNG_ALGORITHM,
                "monotone_rtol": MONOTONE_RTOL, "min_component": MIN_COMPONENT}

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index"] + [f"lambda_{i + 1}" for i in range(self.n)] + ["scal1", "method"])
        for r in self.records:
            w.writerow([r.index] + [_g17(x) for x in r.spectrum.values] + [_g17(r.scal1), r.method])
        return buf.getvalue()

    def summary(self) -> dict:
        return {
            "header": self.header,
            "n": self.n,
            "samples": self.samples,
            "seed": self.rng_seed,
            "method": self.method,
            "scal1_at_mixed": self.scal1_at_mixed,
            "max_observed": self.max_observed,
            "mixed_is_max": bool(self.mixed_is_max),
            "comparisons": self.comparisons,
            "violations": [{"a": a.index, "b": b.index, "scal1_a": a.scal1, "scal1_b": b.scal1}
                           for a, b in self.violations],
            "failures": [{"index": r.index, "error": r.error} for r in self.failures],
        }

    def to_json(self) -> str:
        return dumps(self.summary())

    def write(self, directory) -> tuple[str, str]:
        os.makedirs(directory, exist_ok=True)
        paths = os.path.join(directory, "scan.csv"), os.path.join(directory, "scan.json")
        with open(paths[0], "w", newline="") as fh:
            fh.write(self.to_csv())
        with open(paths[1], "w") as fh:
            fh.write(self.to_json() + "\n")
        return paths


def _g17(x: float) -> str:
    return "nan" if not math.isfinite(x) else format(float(x), ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad, inner = " " * (indent * level), " " * (indent * (level + 1))
    if isinstance(obj, (bool, np.bool_)) or obj is None:
        return json.dumps(None if obj is None else bool(obj))
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format(float(obj), ".17g") if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + _encode(v, indent, level + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON with every float written to 17 significant digits; NaN becomes null."""
    return _encode(obj, indent, 0)


def _candidate_pairs(spectra, pair_rng, exhaustive: bool) -> list:
    m = len(spectra)
    if exhaustive:
        return [(i, j) for i in range(m) for j in range(i + 1, m)]
    order = sorted(range(m), key=lambda i: (-spectra[i].values[0], i))
    pairs = set()
    for pos, i in enumerate(order):
        for j in order[pos + 1:pos + 1 + NEIGHBOR_WINDOW]:
            pairs.add((min(i, j), max(i, j)))
    if m > 1:
        for i, j in pair_rng.integers(0, m, size=(m, 2)):
            if i != j:
                pairs.add((min(int(i), int(j)), max(int(i), int(j))))
    return sorted(pairs)


def _violates(a: ScanRecord, b: ScanRecord) -> bool:
    """a majorizes b, so the conjecture wants a.scal1 <= b.scal1."""
    return a.scal1 > b.scal1 + MONOTONE_RTOL * max(abs(a.scal1), abs(b.scal1))


def _check_monotone(records, pairs):
    violations, partners, comparisons = [], {}, 0
    for i, j in pairs:
        a, b = records[i], records[j]
        if not (a.ok and b.ok):
            continue
        for x, y in ((a, b), (b, a)):
            if majorizes(x.spectrum, y.spectrum):
                comparisons += 1
                partners.setdefault(x.index, y.index)
                if _violates(x, y):
                    violations.append((x, y))
                break
    return violations, partners, comparisons


def scan(n: int, samples: int, rng_seed: int = 0, method: str = "closed",
         exhaustive: bool = False, workers: int | None = None) -> ScanReport:
    """Evaluate the curvature on random spectra plus the uniform one and check
    both the maximum at the uniform spectrum and majorization monotonicity."""
    if samples < 1:
        raise DomainError("samples must be at least 1")
    if n < 2:
        raise DomainError("n must be at least 2")
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}")
    spec_rng, pair_rng = make_rng(rng_seed)
    spectra = [sample_spectrum(n, spec_rng) for _ in range(samples)]
    spectra.append(Spectrum(np.full(n, 1.0 / n)))
    values = _evaluate_all(spectra, method, workers)
    tag = METHODS[method].value
    records = [ScanRecord(i, s, v, tag, rng_seed, None, err) for i, (s, (v, err)) in enumerate(zip(spectra, values))]

    pairs = _candidate_pairs(spectra[:-1], pair_rng, exhaustive)
    uniform = len(spectra) - 1
    pairs += [(i, uniform) for i in range(samples)]
    violations, partners, comparisons = _check_monotone(records, pairs)
    records = [ScanRecord(r.index, r.spectrum, r.scal1, r.method, r.seed, partners.get(r.index), r.error)
               for r in records]
    violations = [(records[a.index], records[b.index]) for a, b in violations]

    ok = [r.scal1 for r in records[:-1] if r.ok]
    return ScanReport(
        n=n, samples=samples, rng_seed=rng_seed, method=tag,
        scal1_at_mixed=records[-1].scal1,
        max_observed=max(ok) if ok else math.nan,
        records=tuple(records), violations=tuple(violations), comparisons=comparisons,
        failures=tuple(r for r in records if not r.ok),
    )


@dataclass(frozen=True)
class RayScan:
    """Curvature along lambda(s) = (1-s) uniform + s p, where p is a near-pure state
    with every minor component equal to ``floor``."""

    n: int
    s: np.ndarray
    scal1: np.ndarray
    violations: tuple

    def to_dict(self) -> dict:
        return {"n": self.n, "header": {"direction": DIRECTION, "sign_convention": SIGN_CONVENTION},
                "s": self.s.tolist(), "scal1": self.scal1.tolist(),
                "violations": [list(v) for v in self.violations]}


def ray_scan(n: int, points: int = 50, method: str = "closed", floor: float = MIN_COMPONENT) -> RayScan:
    """Boundary approach along a ray from the uniform spectrum. Later points
    majorize earlier ones, so the curvature should not increase along s."""
    if n < 2 or points < 2:
        raise DomainError("need n >= 2 and at least 2 points")
    uniform = np.full(n, 1.0 / n)
    pure = np.full(n, floor)
    pure[0] = 1.0 - (n - 1) * floor
    s = np.linspace(0.0, 1.0, points)
    vals = np.array([_evaluate(((1 - t) * uniform + t * pure, method))[0] for t in s])
    bad = tuple((i, i + 1) for i in range(points - 1)
                if vals[i + 1] > vals[i] + MONOTONE_RTOL * max(abs(vals[i]), abs(vals[i + 1])))
    return RayScan(n, s, vals, bad)


def method_consistency(report: ScanReport, fraction: float = 0.01, seed: int = 0) -> float:
    """Largest relative gap between closed-form and oracle values on a random
    subsample (at least one record) of a closed-form scan."""
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))
    good = [r for r in report.records if r.ok]
    k = max(1, int(round(fraction * len(good))))
    pick = sorted(rng.choice(len(good), size=k, replace=False))
    worst = 0.0
    for i in pick:
        r = good[i]
        closed = curvature(r.spectrum, "closed")
        orc = curvature(r.spectrum, "oracle")
        worst = max(worst, abs(closed - orc) / max(abs(closed), 1.0))
    return worst
