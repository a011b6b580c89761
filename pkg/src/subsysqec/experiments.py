"""Monte Carlo drivers: ExRec failure rates, pseudo-thresholds and memory chains.

Failure types follow the probe: the |0_L> probe exposes x-type failures
(a logical X flips the Z_L readout) and the |+_L> probe z-type failures.

Trial ``k`` of a probe always draws from the stream of ``(seed, probe, k)``
and trials are cut into fixed chunks before they are handed to workers, so
counts do not depend on how many workers run them.
"""
from __future__ import annotations

import csv
import io
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np
from scipy.stats import binom, norm

from .builders import (
    DEFAULT_REPS,
    chain_circuit,
    convert_down_exrec,
    convert_up_exrec,
    memory_exrec,
)
from .circuit import Circuit
from .code import build_code
from .frame import compile_circuit, sample
from .noise import NoiseModel

__all__ = [
    "CSV_FIELDS",
    "ChainConfig",
    "ChainResult",
    "ExRecSpec",
    "ResultRow",
    "StratifiedEstimator",
    "ThresholdResult",
    "chain_R",
    "count_failures",
    "crossover_N",
    "estimate_failure",
    "fit_slope",
    "pseudo_threshold",
    "wilson",
    "write_csv",
]

CHUNK = 10_000
Z95 = float(norm.ppf(0.975))


# --- circuits under test ---------------------------------------------------------


@dataclass(frozen=True)
class ExRecSpec:
    """Names a probe-able circuit family: ``build(probe)`` gives the circuit."""

    kind: str  # memory | convert_up | convert_down | chain-plain | chain-combined
    n1: int = 3
    n2: int = 3
    r_z: int = DEFAULT_REPS
    r_x: int = DEFAULT_REPS
    N: int = 0
    vote: str = "agree"

    def __post_init__(self) -> None:
        if self.kind not in ("memory", "convert_up", "convert_down", "chain-plain", "chain-combined"):
            raise ValueError(f"unknown circuit kind {self.kind!r}")

    def build(self, probe: str) -> Circuit:
        return _build(self, probe.upper())

    @property
    def code_label(self) -> str:
        if self.kind == "convert_up":
            return "C(3,3)->C(5,3)"
        if self.kind == "convert_down":
            return "C(5,3)->C(3,3)"
        if self.kind == "chain-combined":
            return "C(3,3)+C(5,3)"
        if self.kind == "chain-plain":
            return "C(3,3)"
        return f"C({self.n1},{self.n2})"


@lru_cache(maxsize=64)
def _build(spec: ExRecSpec, probe: str) -> Circuit:
    kw = dict(r_z=spec.r_z, r_x=spec.r_x, probe=probe, vote=spec.vote)
    if spec.kind == "memory":
        return memory_exrec(build_code(spec.n1, spec.n2), **kw)
    if spec.kind == "convert_up":
        return convert_up_exrec(**kw)
    if spec.kind == "convert_down":
        return convert_down_exrec(**kw)
    variant = "plain-3x3" if spec.kind == "chain-plain" else "combined"
    return chain_circuit(variant, spec.N, **kw)


# --- statistics ---------------------------------------------------------------------


def wilson(k: int, n: int, z: float = Z95) -> tuple[float, float]:
    """Wilson score interval for ``k`` successes in ``n`` trials."""
    if n <= 0:
        raise ValueError("no trials")
    phat = k / n
    denom = 1 + z * z / n
    centre = (phat + z * z / (2 * n)) / denom
    half = z * math.sqrt(phat * (1 - phat) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def _combine(fx: float, fz: float) -> float:
    return 1 - (1 - fx) * (1 - fz)


def fit_slope(ps: Sequence[float], fs: Sequence[float]) -> float:
    """Least-squares slope of ``log f`` against ``log p`` (points with f = 0 dropped)."""
    pts = [(math.log(p), math.log(f)) for p, f in zip(ps, fs) if f > 0]
    if len(pts) < 2:
        raise ValueError("need two points with nonzero failure rate")
    x, y = np.array(pts).T
    return float(np.polyfit(x, y, 1)[0])


# --- result rows ------------------------------------------------------------------------


@dataclass
class ResultRow:
    experiment: str
    code: str
    alpha: float
    pz: float
    px: float
    N: int | str
    rz: int
    rx: int
    trials: int
    seed: int
    fail_z: int | str
    fail_x: int | str
    fail_total: int | str
    est: float
    ci_low: float
    ci_high: float
    locations: int
    wall_ms: int
    extra: dict = field(default_factory=dict, compare=False)

    def csv_values(self, timing: bool = True) -> list[str]:
        out = []
        for f in CSV_FIELDS:
            v = getattr(self, f)
            if f == "wall_ms" and not timing:
                v = 0
            out.append(_fmt(v))
        return out


CSV_FIELDS = tuple(f.name for f in fields(ResultRow) if f.name != "extra")


def _fmt(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(float(f"{v:.10g}"))
    return str(v)


def write_csv(rows: Iterable[ResultRow], path=None, timing: bool = True) -> str:
    """CSV text with the mandatory header; also written to ``path`` when given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow(r.csv_values(timing))
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


# --- plain Monte Carlo ----------------------------------------------------------------


def _probe_seed(seed: int, probe: str) -> int:
    return (int(seed) << 1 | (probe == "Z")) & 0xFFFFFFFFFFFFFFFF


def _chunk_failures(task) -> int:
    spec, probe, model, seed, start, count, backend = task
    comp = compile_circuit(spec.build(probe))
    s = sample(comp, model, count, _probe_seed(seed, probe), start, backend=backend)
    x_flip, z_flip = s.logical_flips()
    return int((x_flip if probe == "Z" else z_flip).sum())


def _map(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks))


def count_failures(spec: ExRecSpec, probe: str, model: NoiseModel, trials: int, seed: int,
                   workers: int = 1, backend: str = "auto") -> int:
    """Failures of the probe's type among ``trials`` noisy trials."""
    tasks = [(spec, probe, model, seed, start, min(CHUNK, trials - start), backend)
             for start in range(0, trials, CHUNK)]
    return sum(_map(_chunk_failures, tasks, workers))


def estimate_failure(spec: ExRecSpec, model: NoiseModel, trials: int, seed: int,
                     workers: int = 1, backend: str = "auto", experiment: str = "exrec") -> ResultRow:
    """Half the trials on each probe; total failure ``1 - (1 - f_x)(1 - f_z)``.

    The total's interval combines the two Wilson intervals endpoint-wise,
    which covers at least 95% when both do.
    """
    if trials < 2:
        raise ValueError("need at least one trial per probe")
    t0 = time.perf_counter()
    n_x = trials // 2  # |0_L> probe
    n_z = trials - n_x  # |+_L> probe
    fail_x = count_failures(spec, "Z", model, n_x, seed, workers, backend)
    fail_z = count_failures(spec, "X", model, n_z, seed, workers, backend)
    fx, fz = fail_x / n_x, fail_z / n_z
    lx, hx = wilson(fail_x, n_x)
    lz, hz = wilson(fail_z, n_z)
    wall = int(round((time.perf_counter() - t0) * 1000))
    return ResultRow(
        experiment, spec.code_label, model.alpha, model.p_z, model.p_x, spec.N, spec.r_z, spec.r_x,
        trials, seed, fail_z, fail_x, fail_z + fail_x, _combine(fx, fz),
        _combine(lx, lz), _combine(hx, hz), spec.build("X").noisy_location_count(), wall,
        extra={"f_x": fx, "f_z": fz, "ci_x": (lx, hx), "ci_z": (lz, hz), "n_x": n_x, "n_z": n_z},
    )


# --- stratified estimation ----------------------------------------------------------------


class StratifiedEstimator:
    """Failure rate of one probe circuit as a mixture over fault counts.

    Under uniform noise every noise site independently takes a Z with
    probability ``p_z`` and an X with probability ``p_x``, so with ``S``
    sites the number of Z events is Binomial(S, p_z) and of X events
    Binomial(S, p_x), and given the counts the positions are uniform. The
    conditional failure rates ``f[kz, kx]`` do not depend on ``p``; they are
    estimated once by injecting exactly that many faults and reused for any
    ``(p_z, p_x)``. Strata with one fault are enumerated exhaustively.
    Fault counts above ``k_max`` are bounded by 0 and 1.
    """

    def __init__(self, spec: ExRecSpec, probe: str, seed: int = 0, k_max: int = 6,
                 gauge_seeds: int = 2, backend: str = "auto"):
        self.spec = spec
        self.probe = probe.upper()
        self.seed = seed
        self.k_max = k_max
        self.backend = backend
        self.comp = compile_circuit(spec.build(self.probe))
        self.sites = self.comp.num_noise
        self.counts: dict[tuple[int, int], list[int]] = {}  # stratum -> [fails, samples]
        self.exact: dict[tuple[int, int], float] = {(0, 0): self._exhaustive(0, gauge_seeds)}
        self.exact[(1, 0)] = self._exhaustive(2, gauge_seeds)
        self.exact[(0, 1)] = self._exhaustive(1, gauge_seeds)

    def _flips(self, ptr, ids, codes, seed) -> np.ndarray:
        s = sample(self.comp, None, len(ptr) - 1, seed, fault_csr=(ptr, ids, codes), backend=self.backend)
        x_flip, z_flip = s.logical_flips()
        return x_flip if self.probe == "Z" else z_flip

    def _exhaustive(self, code: int, gauge_seeds: int) -> float:
        n = self.sites if code else 1
        ptr = np.arange(n + 1, dtype=np.int64) if code else np.zeros(2, dtype=np.int64)
        ids = np.arange(n, dtype=np.int64) if code else np.zeros(0, dtype=np.int64)
        codes = np.full(len(ids), code, dtype=np.uint8)
        fails = sum(int(self._flips(ptr, ids, codes, self.seed + g).sum()) for g in range(gauge_seeds))
        return fails / (n * gauge_seeds)

    def _draw_sites(self, rng, n: int, k: int) -> np.ndarray:
        out = rng.integers(0, self.sites, size=(n, k))
        if k > 1:
            while True:
                s = np.sort(out, axis=1)
                dup = (s[:, 1:] == s[:, :-1]).any(axis=1)
                if not dup.any():
                    break
                out[dup] = rng.integers(0, self.sites, size=(int(dup.sum()), k))
        return out

    def add_samples(self, stratum: tuple[int, int], n: int) -> None:
        """Inject ``n`` more random configurations with ``kz`` Z and ``kx`` X faults."""
        kz, kx = stratum
        fails, done = self.counts.setdefault(stratum, [0, 0])
        rng = np.random.default_rng([self.seed, kz, kx, done, n, 0x5EED])
        zs = self._draw_sites(rng, n, kz)
        xs = self._draw_sites(rng, n, kx)
        ids = np.concatenate([zs, xs], axis=1)
        codes = np.concatenate([np.full((n, kz), 2, np.uint8), np.full((n, kx), 1, np.uint8)], axis=1)
        order = np.argsort(ids, axis=1, kind="stable")
        ids = np.take_along_axis(ids, order, axis=1)
        codes = np.take_along_axis(codes, order, axis=1)
        # a site hit by both becomes Y: merge equal neighbours
        flat_ids, flat_codes, ptr = [], [], [0]
        k = kz + kx
        if k:
            same = np.zeros_like(ids, dtype=bool)
            same[:, 1:] = ids[:, 1:] == ids[:, :-1]
            if same.any():
                codes = codes.copy()
                rows, cols = np.nonzero(same)
                codes[rows, cols - 1] |= codes[rows, cols]
            keep = ~same
            flat_ids = ids[keep]
            flat_codes = codes[keep]
            ptr = np.concatenate([[0], np.cumsum(keep.sum(axis=1))])
        else:
            ptr = np.zeros(n + 1, dtype=np.int64)
        flips = self._flips(np.asarray(ptr, np.int64), np.asarray(flat_ids, np.int64),
                            np.asarray(flat_codes, np.uint8), self.seed * 7919 + done + 1)
        self.counts[stratum] = [fails + int(flips.sum()), done + n]

    def strata(self) -> list[tuple[int, int]]:
        return [(kz, k - kz) for k in range(self.k_max + 1) for kz in range(k + 1)]

    def weights(self, p_z: float, p_x: float) -> dict[tuple[int, int], float]:
        wz = binom.pmf(np.arange(self.k_max + 1), self.sites, p_z)
        wx = binom.pmf(np.arange(self.k_max + 1), self.sites, p_x)
        return {(kz, kx): float(wz[kz] * wx[kx]) for kz, kx in self.strata()}

    def evaluate(self, p_z: float, p_x: float) -> tuple[float, float, float]:
        """``(estimate, low, high)`` at the given rates; unsampled strata count as [0, 1]."""
        w = self.weights(p_z, p_x)
        est = lo = hi = 0.0
        for s, ws in w.items():
            if s in self.exact:
                f = self.exact[s]
                est += ws * f
                lo += ws * f
                hi += ws * f
            elif s in self.counts and self.counts[s][1] > 0:
                k, n = self.counts[s]
                a, b = wilson(k, n)
                est += ws * k / n
                lo += ws * a
                hi += ws * b
            else:
                hi += ws
        tail = max(0.0, 1.0 - sum(w.values()))
        return est, lo, min(1.0, hi + tail)

    def refine(self, p_z: float, p_x: float, budget: int, batch: int = 20_000) -> None:
        """Spend ``budget`` samples on the strata with the widest weighted intervals."""
        w = self.weights(p_z, p_x)
        spent = 0
        while spent < budget:
            best, width = None, 0.0
            for s, ws in w.items():
                if s in self.exact or ws <= 0:
                    continue
                if s in self.counts:
                    k, n = self.counts[s]
                    a, b = wilson(k, n)
                    contrib = ws * (b - a)
                else:
                    contrib = ws
                if contrib > width:
                    best, width = s, contrib
            if best is None:
                return
            self.add_samples(best, batch)
            spent += batch

    def total_samples(self) -> int:
        return sum(n for _, n in self.counts.values())


# --- pseudo-thresholds -------------------------------------------------------------------


@dataclass
class ThresholdResult:
    code: str
    error_type: str
    alpha: float
    p_star: float | None  # None when there is no crossing in the bracket
    bracket: tuple[float, float]
    crossing: bool
    samples: int
    message: str = ""
    curve: list = field(default_factory=list)  # (p, est, lo, hi)


def _rates(error_type: str, p: float, alpha: float) -> tuple[float, float]:
    if error_type == "z":
        return p, (0.0 if math.isinf(alpha) else p / alpha)
    return (0.0 if alpha == 0 else p * alpha), p


def pseudo_threshold(n1: int, n2: int, error_type: str, alpha: float, seed: int = 0,
                     bracket: tuple[float, float] = (1e-7, 1e-3), r_z: int = DEFAULT_REPS,
                     r_x: int = DEFAULT_REPS, rel_tol: float = 0.02, budget: int = 4_000_000,
                     k_max: int = 6, backend: str = "auto") -> ThresholdResult:
    """Crossing ``f_type(p) = p`` of the memory ExRec, ``p`` being the named error rate.

    The other rate follows from ``alpha = p_z / p_x``. ``f`` is evaluated with
    a :class:`StratifiedEstimator`; the returned bracket holds every ``p``
    whose interval does not exclude the crossing, refined by adding samples
    until the bracket is ``rel_tol`` narrow in log space or the sample
    budget is spent.
    """
    error_type = error_type.lower()
    if error_type not in ("z", "x"):
        raise ValueError("error type must be 'z' or 'x'")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    spec = ExRecSpec("memory", n1, n2, r_z, r_x)
    est = StratifiedEstimator(spec, "X" if error_type == "z" else "Z", seed, k_max, backend=backend)
    a, b = bracket

    def f(p):
        return est.evaluate(*_rates(error_type, p, alpha))

    def side(p, refine=True):
        """-1: f(p) < p surely, +1: f(p) > p surely, 0: undecided."""
        for _ in range(64):
            e, lo, hi = f(p)
            if hi < p:
                return -1
            if lo > p:
                return 1
            if not refine or est.total_samples() >= budget:
                return 0
            est.refine(*_rates(error_type, p, alpha), budget=100_000)
        return 0

    label = f"C({n1},{n2})"
    if side(a) != -1 or side(b) != 1:
        curve = [(p, *f(p)) for p in np.geomspace(a, b, 9)]
        return ThresholdResult(label, error_type, alpha, None, bracket, False, est.total_samples(),
                               f"no crossing of f(p) = p established inside [{a:g}, {b:g}]", curve)

    def boundary(sign):
        # outermost p on the given side that is still decided
        lo_p, hi_p = a, b
        while math.log(hi_p / lo_p) > rel_tol / 4:
            m = math.sqrt(lo_p * hi_p)
            s = side(m, refine=False)
            if s == 0:
                if sign < 0:
                    hi_p = m
                else:
                    lo_p = m
            elif s < 0:
                lo_p = m
            else:
                hi_p = m
        return lo_p if sign < 0 else hi_p

    while True:
        lower, upper = boundary(-1), boundary(1)
        if math.log(upper / lower) <= rel_tol or est.total_samples() >= budget:
            break
        m = math.sqrt(lower * upper)
        est.refine(*_rates(error_type, m, alpha), budget=200_000)
    # point estimate: root of the central curve
    lo_p, hi_p = lower, upper
    for _ in range(60):
        m = math.sqrt(lo_p * hi_p)
        if f(m)[0] < m:
            lo_p = m
        else:
            hi_p = m
    p_star = math.sqrt(lo_p * hi_p)
    curve = [(p, *f(p)) for p in np.geomspace(lower / 3, upper * 3, 9)]
    return ThresholdResult(label, error_type, alpha, p_star, (lower, upper), True,
                           est.total_samples(), curve=curve)


# --- memory chains ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ChainConfig:
    alpha: float
    p_z: float
    N: int
    trials: int
    seed: int = 0
    r_z: int = DEFAULT_REPS
    r_x: int = DEFAULT_REPS
    variants: tuple[str, ...] = ("plain-3x3", "combined")

    def __post_init__(self) -> None:
        if self.trials < 2:
            raise ValueError("trials must be at least 2")
        for v in self.variants:
            if v not in ("plain-3x3", "combined"):
                raise ValueError(f"unknown chain variant {v!r}")

    @property
    def model(self) -> NoiseModel:
        return NoiseModel.from_alpha(self.p_z, self.alpha)

    def spec(self, variant: str) -> ExRecSpec:
        kind = "chain-plain" if variant == "plain-3x3" else "chain-combined"
        return ExRecSpec(kind, 3, 3, self.r_z, self.r_x, self.N)


@dataclass
class ChainResult:
    config: ChainConfig
    rows: dict  # variant -> ResultRow
    R: float | None = None
    ci: tuple[float, float] | None = None
    lower_bound_only: bool = False

    def csv_rows(self) -> list[ResultRow]:
        out = list(self.rows.values())
        if self.R is not None:
            plain = self.rows["plain-3x3"]
            out.append(ResultRow(
                "chain_R", "C(3,3)/C(3,3)+C(5,3)", plain.alpha, plain.pz, plain.px, self.config.N,
                plain.rz, plain.rx, sum(r.trials for r in self.rows.values()), self.config.seed,
                "", "", "", self.R, self.ci[0], self.ci[1],
                sum(r.locations for r in self.rows.values()),
                sum(r.wall_ms for r in self.rows.values())))
        return out


def chain_R(config: ChainConfig, workers: int = 1, backend: str = "auto") -> ChainResult:
    """``R = f_total(plain) / f_total(combined)`` with a delta-method 95% interval.

    With no combined failures R is reported as a lower bound computed from
    the upper end of the combined interval.
    """
    rows = {}
    for v in config.variants:
        rows[v] = estimate_failure(config.spec(v), config.model, config.trials, config.seed,
                                   workers, backend, experiment=f"chain_{v}")
    res = ChainResult(config, rows)
    if set(rows) != {"plain-3x3", "combined"}:
        return res
    p, c = rows["plain-3x3"], rows["combined"]
    if c.fail_total == 0:
        res.R = p.est / c.ci_high if c.ci_high > 0 else math.inf
        res.ci = (res.R, math.inf)
        res.lower_bound_only = True
        return res
    if p.fail_total == 0:
        res.R = 0.0
        res.ci = (0.0, p.ci_high / c.est)
        return res
    res.R = p.est / c.est
    # relative variances of the two totals from their per-probe binomials
    var = _rel_var(p) + _rel_var(c)
    half = Z95 * math.sqrt(var)
    res.ci = (res.R * math.exp(-half), res.R * math.exp(half))
    return res


def _rel_var(row: ResultRow) -> float:
    fx, fz = row.extra["f_x"], row.extra["f_z"]
    nx, nz = row.extra["n_x"], row.extra["n_z"]
    total = row.est
    # d total / d fx = 1 - fz, d total / d fz = 1 - fx
    v = (1 - fz) ** 2 * fx * (1 - fx) / nx + (1 - fx) ** 2 * fz * (1 - fz) / nz
    return v / total**2


def crossover_N(alpha: float, p_z: float, seed: int = 0, trials: int = 200_000,
                n_max: int = 256, workers: int = 1, r_z: int = DEFAULT_REPS,
                r_x: int = DEFAULT_REPS, backend: str = "auto") -> tuple[int | None, list[ChainResult]]:
    """Smallest N whose R interval lies at or above 1: doubling scan, then bisection.

    Returns ``(None, history)`` when no N up to ``n_max`` qualifies.
    """
    history: list[ChainResult] = []
    cache: dict[int, ChainResult] = {}

    def passes(n: int) -> bool:
        if n not in cache:
            cache[n] = chain_R(ChainConfig(alpha, p_z, n, trials, seed, r_z, r_x), workers, backend)
            history.append(cache[n])
        r = cache[n]
        return r.ci is not None and r.ci[0] >= 1.0

    n = 1
    while not passes(n):
        if n >= n_max:
            return None, history
        n = min(2 * n, n_max)
    lo, hi = n // 2, n  # lo fails (or is 0), hi passes
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if passes(mid):
            hi = mid
        else:
            lo = mid
    return hi, history


def row_dict(row: ResultRow) -> dict:
    d = asdict(row)
    d.pop("extra")
    return d
