"""Monte Carlo studies: null calibration, power tables, change-point histograms.

Scenarios are piecewise-iid sequences.  Each segment names a distribution
family with explicit parameters; normal segments carry either ``sd`` or
``var`` so the scale convention is never implicit.  A segment may also drift
a parameter to ``base + b / sqrt(n)``.
"""

from __future__ import annotations

import csv
import io
import json
import math
import platform
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import stats

from . import __version__, _rng, core, inference
from .errors import InsufficientReps, UnsupportedCombination, UnsupportedFamily
from .quadform import imhof_tail, quantile

FAMILIES = {
    "gamma": ("shape", "scale"),
    "normal": ("mean",),
    "exponential": ("mean",),
    "uniform": ("low", "high"),
}
STAT_KINDS = inference.KINDS
DEFAULT_CRIT_REPS = 20_000


@dataclass(frozen=True)
class Segment:
    family: str
    params: dict
    fraction: float
    drift: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise UnsupportedFamily(f"unsupported family {self.family!r}")
        need = set(FAMILIES[self.family])
        if self.family == "normal":
            if ("sd" in self.params) == ("var" in self.params):
                raise ValueError("normal segments need exactly one of 'sd' or 'var'")
        missing = need - set(self.params)
        if missing:
            raise ValueError(f"{self.family} segment missing {sorted(missing)}")
        if not self.fraction > 0:
            raise ValueError("segment fractions must be positive")

    def parameters(self, n):
        p = dict(self.params)
        for name, b in self.drift.items():
            p[name] = p[name] + b / math.sqrt(n)
        return p

    def draw(self, rng, n, shape):
        p = self.parameters(n)
        if self.family == "gamma":
            return rng.gamma(p["shape"], p["scale"], shape)
        if self.family == "normal":
            sd = p["sd"] if "sd" in p else math.sqrt(p["var"])
            return rng.normal(p["mean"], sd, shape)
        if self.family == "exponential":
            return rng.exponential(p["mean"], shape)
        return rng.uniform(p["low"], p["high"], shape)


@dataclass(frozen=True)
class Scenario:
    segments: tuple
    label: str = ""

    def __post_init__(self):
        if not self.segments:
            raise ValueError("a scenario needs at least one segment")
        total = sum(s.fraction for s in self.segments)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"segment fractions sum to {total}, not 1")
        object.__setattr__(self, "segments", tuple(self.segments))

    def boundaries(self, n):
        cum = np.cumsum([s.fraction for s in self.segments])
        ends = [int(round(c * n)) for c in cum]
        ends[-1] = n
        return [0, *ends]

    def draw(self, rng, n, size):
        bounds = self.boundaries(n)
        parts = [seg.draw(rng, n, (size, hi - lo)) for seg, lo, hi in zip(self.segments, bounds, bounds[1:])]
        return np.concatenate(parts, axis=1)


NULL_SCENARIO = Scenario((Segment("normal", {"mean": 0.0, "sd": 1.0}, 1.0),), "null")


def simulate_statistics(scenario: Scenario, n, reps, seed, kinds=STAT_KINDS, key=(), workers=1):
    """Statistics of ``reps`` datasets of size ``n``; dict kind -> array.

    Rank statistics and ``c_hat`` come from one scan per dataset;
    ``mean_change`` is T_s^2.
    """
    kinds = tuple(kinds)
    want_rank = any(k in ("wbar", "wmax", "c_hat") for k in kinds)
    want_mean = "mean_change" in kinds

    def block(rng, size):
        x = scenario.draw(rng, n, size)
        out = {}
        if want_rank:
            wbar, wmax, chat = core.scan_batch(np.argsort(np.argsort(x, axis=1), axis=1) + 1)
            out.update(wbar=wbar, wmax=wmax, c_hat=chat)
        if want_mean:
            out["mean_change"] = core.mean_change_batch(x)[2]
        return out

    blocks = _rng.run_blocks(block, reps, seed, key=key, workers=workers)
    return {k: np.concatenate([b[k] for b in blocks]) for k in kinds}


def _order_stat_index(alpha, reps):
    idx = math.ceil((1.0 - alpha) * (reps + 1) - 1e-9)
    return min(max(idx, 1), reps) - 1


def mc_critical_point(kind, n, alpha, reps=DEFAULT_CRIT_REPS, seed=0, null_draws=None):
    """Empirical upper-alpha point of the null statistic (order statistic
    ``ceil((1 - alpha)(reps + 1))``)."""
    if reps * alpha < 50:
        raise InsufficientReps(f"reps*alpha = {reps * alpha:g} < 50")
    if null_draws is None:
        null_draws = simulate_statistics(NULL_SCENARIO, n, reps, seed, (kind,), key=(0, n))[kind]
    ordered = np.sort(null_draws)
    return float(ordered[_order_stat_index(alpha, ordered.size)])


def asymptotic_critical_point(kind, alpha, M=inference.DEFAULT_M):
    if kind == "wmax":
        raise UnsupportedCombination("wmax has no asymptotic critical point")
    law = "wbar" if kind == "wbar" else "anderson_darling"
    return quantile(inference.limit_law(law, M), alpha)


@dataclass(frozen=True)
class PowerRow:
    scenario: str
    n: int
    alpha: float
    statistic: str
    critical_source: str
    critical_value: float
    rate: float
    reps: int
    se: float


def power_table(scenarios: Sequence[Scenario], n_list, alphas, kinds=("wbar", "wmax"), reps=10_000,
                critical=("mc",), seed=0, crit_reps=DEFAULT_CRIT_REPS, M=inference.DEFAULT_M, workers=1):
    """Rejection rates for every scenario x n x alpha x statistic x critical source.

    All cells for one (scenario, n) share the same simulated datasets.  The
    unsupported (wmax, asymptotic) pairing is skipped when another source is
    requested too and raises otherwise.
    """
    if isinstance(critical, str):
        critical = (critical,)
    for src in critical:
        if src not in ("mc", "asymptotic"):
            raise ValueError(f"unknown critical source {src!r}")
    if "wmax" in kinds and tuple(critical) == ("asymptotic",):
        raise UnsupportedCombination("wmax needs Monte Carlo critical points")
    rows = []
    asym = {}
    for n in n_list:
        crit = {}
        if "mc" in critical:
            null = simulate_statistics(NULL_SCENARIO, n, crit_reps, seed, kinds, key=(0, n), workers=workers)
            for kind in kinds:
                for a in alphas:
                    crit[(kind, "mc", a)] = mc_critical_point(kind, n, a, crit_reps, null_draws=null[kind])
        if "asymptotic" in critical:
            for kind in kinds:
                if kind == "wmax":
                    continue
                for a in alphas:
                    if (kind, a) not in asym:
                        asym[(kind, a)] = asymptotic_critical_point(kind, a, M)
                    crit[(kind, "asymptotic", a)] = asym[(kind, a)]
        for si, sc in enumerate(scenarios):
            sims = simulate_statistics(sc, n, reps, seed, kinds, key=(1, si, n), workers=workers)
            for a in alphas:
                for kind in kinds:
                    for src in critical:
                        if (kind, src, a) not in crit:
                            continue
                        cv = crit[(kind, src, a)]
                        rate = float(np.mean(sims[kind] > cv))
                        se = math.sqrt(rate * (1 - rate) / reps)
                        rows.append(PowerRow(sc.label, n, a, kind, src, cv, rate, reps, se))
    return rows


@dataclass(frozen=True)
class CalibrationResult:
    n: int
    N: int
    pvalues: np.ndarray
    ks_distance: float
    ks_critical_05: float
    ks_pvalue: float
    ad_statistic: float
    ad_pvalue: float
    rejection_05: float
    lower_ks_distance: float
    lower_ad_statistic: float
    lower_ad_pvalue: float

    def qq(self):
        """(plotting points i/(N+1), ordered p-values)."""
        return np.arange(1, self.N + 1) / (self.N + 1), self.pvalues

    def summary(self):
        d = asdict(self)
        d.pop("pvalues")
        return d


def anderson_darling_uniform(p):
    """A^2 of a sample against Uniform(0, 1) and its asymptotic p-value."""
    p = np.sort(np.clip(np.asarray(p, dtype=np.float64), 1e-300, 1 - 1e-16))
    m = p.size
    i = np.arange(1, m + 1)
    a2 = -m - np.mean((2 * i - 1) * (np.log(p) + np.log1p(-p[::-1])))
    return float(a2), float(inference.mean_change_asymptotic_pvalue(max(a2, 0.0)))


def null_calibration(n=200, N=10_000, M=inference.DEFAULT_M, seed=0, workers=1, lower_fraction=0.1):
    """Asymptotic wbar p-values of ``N`` null samples and their uniformity.

    The lower-tail check rescales the smallest ``lower_fraction * N`` p-values
    by the next order statistic before testing uniformity.
    """
    if n < 10 or N < 100:
        raise ValueError("need n >= 10 and N >= 100")
    wbar = simulate_statistics(NULL_SCENARIO, n, N, seed, ("wbar",), key=(2, n), workers=workers)["wbar"]
    p = np.sort(inference.wbar_asymptotic_pvalue(wbar, M))
    ks = stats.kstest(p, "uniform")
    a2, a2p = anderson_darling_uniform(p)
    m = int(lower_fraction * N)
    low = p[:m] / p[m]
    low_ks = stats.kstest(low, "uniform").statistic
    low_a2, low_a2p = anderson_darling_uniform(low)
    p.setflags(write=False)
    return CalibrationResult(n, N, p, float(ks.statistic), float(stats.kstwo.ppf(0.95, N)), float(ks.pvalue),
                             a2, a2p, float(np.mean(p < 0.05)), float(low_ks), low_a2, low_a2p)


@dataclass(frozen=True)
class ChatHistogram:
    n: int
    N: int
    edges: np.ndarray
    counts: np.ndarray
    left_mass: float
    right_mass: float

    @property
    def edge_mass(self):
        return self.left_mass + self.right_mass

    def se(self, mass):
        return math.sqrt(mass * (1 - mass) / self.N)


def chat_histogram(n=100, N=10_000, seed=0, bins=20, edge=0.05, workers=1):
    """Histogram of c_hat / n under the null plus the mass within ``edge`` of 0 and 1."""
    if n < 20:
        raise ValueError("need n >= 20")
    chat = simulate_statistics(NULL_SCENARIO, n, N, seed, ("c_hat",), key=(3, n), workers=workers)["c_hat"]
    frac = chat / n
    counts, edges = np.histogram(frac, bins=bins, range=(0.0, 1.0))
    left = float(np.mean(frac <= edge))
    right = float(np.mean(frac >= 1 - edge))
    return ChatHistogram(n, N, edges, counts, left, right)


# scenario files -----------------------------------------------------------

def _segment_from_dict(d):
    d = dict(d)
    family = d.pop("family")
    fraction = float(d.pop("fraction"))
    drift = {k: float(v) for k, v in d.pop("drift", {}).items()}
    return Segment(family, {k: float(v) for k, v in d.items()}, fraction, drift)


def scenario_from_dict(d):
    return Scenario(tuple(_segment_from_dict(s) for s in d["segments"]), d.get("label", ""))


def load_config(path):
    try:
        import tomllib
    except ModuleNotFoundError:
        import tomli as tomllib
    with open(path, "rb") as fh:
        return tomllib.load(fh)


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def run_config(cfg, overrides=None, workers=1):
    """Run an experiment description; returns (header, rows, manifest)."""
    cfg = {**cfg, **{k: v for k, v in (overrides or {}).items() if v is not None}}
    kind = cfg.get("experiment", "power")
    seed = int(cfg.get("seed", 0))
    manifest = {"schema": "cvmcp.run/1", "config": cfg, "versions": versions()}
    if kind == "power":
        scenarios = [scenario_from_dict(s) for s in cfg["scenarios"]]
        rows = power_table(scenarios, [int(n) for n in _as_list(cfg["n"])], [float(a) for a in _as_list(cfg["alpha"])],
                           tuple(_as_list(cfg.get("stats", ["wbar", "wmax"]))), int(cfg.get("reps", 10_000)),
                           tuple(_as_list(cfg.get("critical", ["mc"]))), seed,
                           int(cfg.get("crit_reps", DEFAULT_CRIT_REPS)), int(cfg.get("M", inference.DEFAULT_M)),
                           workers)
        header = list(PowerRow.__dataclass_fields__)
        return header, [asdict(r) for r in rows], manifest
    if kind == "chat_histogram":
        header = ["n", "bin_lo", "bin_hi", "count", "density"]
        rows = []
        for n in _as_list(cfg["n"]):
            h = chat_histogram(int(n), int(cfg.get("N", 10_000)), seed, int(cfg.get("bins", 20)),
                               float(cfg.get("edge", 0.05)), workers)
            width = h.edges[1] - h.edges[0]
            for lo, hi, c in zip(h.edges, h.edges[1:], h.counts):
                rows.append({"n": h.n, "bin_lo": lo, "bin_hi": hi, "count": int(c), "density": c / (h.N * width)})
            manifest.setdefault("edge_mass", {})[str(h.n)] = {"left": h.left_mass, "right": h.right_mass}
        return header, rows, manifest
    if kind == "null_calibration":
        header = ["n", "i", "plotting_point", "p_value"]
        rows = []
        for n in _as_list(cfg["n"]):
            res = null_calibration(int(n), int(cfg.get("N", 10_000)), int(cfg.get("M", inference.DEFAULT_M)), seed,
                                   workers)
            pts, pv = res.qq()
            rows.extend({"n": res.n, "i": i + 1, "plotting_point": a, "p_value": b}
                        for i, (a, b) in enumerate(zip(pts, pv)))
            manifest.setdefault("summary", {})[str(res.n)] = res.summary()
        return header, rows, manifest
    raise ValueError(f"unknown experiment {kind!r}")


def versions():
    import scipy

    return {"cvmcp": __version__, "python": platform.python_version(), "numpy": np.__version__,
            "scipy": scipy.__version__}


def rows_to_csv(header, rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, (float, np.floating)) else v) for k, v in r.items()})
    return buf.getvalue()


def manifest_json(manifest):
    return json.dumps(manifest, indent=2, sort_keys=True, default=float)
