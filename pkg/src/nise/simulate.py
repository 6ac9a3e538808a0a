"""Market Monte Carlo: demand/supply data from the structural reduced form.

Demand:  q = gd * p + bd . (inc, ps, pc) + ad + u_d
Supply:  q = gs * p + bs . (r, pf, t)    + as + u_s

Equilibrium price is solved from both equations and inserted into the
demand equation, so every generated row satisfies both exactly.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from nise import stats
from nise.dataset import Dataset
from nise.errors import ConfigError, InvalidScenario, NiseError, UnknownScenario
from nise.estimators import nise_fit, ols_equation, tsls_fit
from nise.resample import substream

DEMAND_SHIFTERS = ("inc", "ps", "pc")
SUPPLY_SHIFTERS = ("r", "pf", "t")
EXOGENOUS = DEMAND_SHIFTERS + SUPPLY_SHIFTERS
ESTIMATORS = ("ols", "tsls", "nise")
SCENARIOS = ("base", "weak", "misspecified")


@dataclass(frozen=True)
class Equation:
    gamma_p: float
    beta: tuple[float, float, float]
    intercept: float
    sd_u: float


@dataclass(frozen=True)
class EstimationSpec:
    exog_in_demand: tuple[str, ...]
    instruments: tuple[str, ...]


@dataclass(frozen=True)
class ScenarioConfig:
    demand: Equation
    supply: Equation
    estimation_spec: EstimationSpec
    n: int
    label: str = "custom"

    def __post_init__(self):
        if self.supply.gamma_p == self.demand.gamma_p:
            raise InvalidScenario("supply and demand price slopes coincide; no reduced form")
        for side, eq in (("demand", self.demand), ("supply", self.supply)):
            if not eq.sd_u > 0:
                raise InvalidScenario(f"{side}.sd_u must be positive, got {eq.sd_u}")
            if len(eq.beta) != 3:
                raise InvalidScenario(f"{side}.beta needs 3 coefficients, got {len(eq.beta)}")
        spec = self.estimation_spec
        unknown = set(spec.exog_in_demand + spec.instruments) - set(EXOGENOUS)
        if unknown:
            raise InvalidScenario(f"unknown variables in estimation spec: {sorted(unknown)}")
        if set(spec.exog_in_demand) & set(spec.instruments):
            raise InvalidScenario("a variable cannot be both included and excluded")
        if int(self.n) != self.n or self.n < 1:
            raise InvalidScenario(f"n must be a positive integer, got {self.n}")


_BASE_DEMAND = Equation(-1.00, (1.50, 0.50, -0.50), 3.00, 2.0)
_BASE_SUPPLY = Equation(0.75, (2.50, -1.50, -1.00), 0.50, 2.0)
_BASE_SPEC = EstimationSpec(DEMAND_SHIFTERS, SUPPLY_SHIFTERS)


def builtin_scenario(name: str, n: int) -> ScenarioConfig:
    """``base``, ``weak`` (faint supply shifters) or ``misspecified`` (rain in demand)."""
    if name == "base":
        return ScenarioConfig(_BASE_DEMAND, _BASE_SUPPLY, _BASE_SPEC, n, "base")
    if name == "weak":
        supply = dataclasses.replace(_BASE_SUPPLY, beta=(0.5, -0.3, -0.2))
        return ScenarioConfig(_BASE_DEMAND, supply, _BASE_SPEC, n, "weak")
    if name == "misspecified":
        spec = EstimationSpec(DEMAND_SHIFTERS + ("r",), ("pf", "t"))
        return ScenarioConfig(_BASE_DEMAND, _BASE_SUPPLY, spec, n, "misspecified")
    raise UnknownScenario(f"unknown scenario {name!r}; choose from {', '.join(SCENARIOS)}")


@dataclass(frozen=True)
class MarketSample:
    dataset: Dataset
    u_d: np.ndarray
    u_s: np.ndarray
    frame: dict[str, np.ndarray]  # q, p and all six exogenous variables


def market_from_draws(cfg: ScenarioConfig, exog: dict, u_d, u_s) -> MarketSample:
    """Solve the two-equation system for given exogenous values and shocks."""
    d, s = cfg.demand, cfg.supply
    x = {k: np.asarray(exog[k], dtype=np.float64) for k in EXOGENOUS}
    u_d = np.asarray(u_d, dtype=np.float64)
    u_s = np.asarray(u_s, dtype=np.float64)
    demand_shift = sum(b * x[k] for b, k in zip(d.beta, DEMAND_SHIFTERS)) + d.intercept + u_d
    supply_shift = sum(b * x[k] for b, k in zip(s.beta, SUPPLY_SHIFTERS)) + s.intercept + u_s
    p = (demand_shift - supply_shift) / (s.gamma_p - d.gamma_p)
    q = d.gamma_p * p + demand_shift
    frame = {"q": q, "p": p, **x}
    spec = cfg.estimation_spec
    data = Dataset(
        np.column_stack([q, p]),
        np.column_stack([x[k] for k in spec.exog_in_demand]) if spec.exog_in_demand else None,
        np.column_stack([x[k] for k in spec.instruments]) if spec.instruments else None,
        ("q", "p"),
        spec.exog_in_demand,
        spec.instruments,
    )
    return MarketSample(data, u_d, u_s, frame)


def gen_market_sample(cfg: ScenarioConfig, rng: np.random.Generator) -> MarketSample:
    """Draw one sample: six iid N(0, 1) shifters, then the two normal shocks."""
    n = cfg.n
    z = rng.standard_normal((len(EXOGENOUS), n))
    u_d = cfg.demand.sd_u * rng.standard_normal(n)
    u_s = cfg.supply.sd_u * rng.standard_normal(n)
    return market_from_draws(cfg, dict(zip(EXOGENOUS, z)), u_d, u_s)


@dataclass(frozen=True)
class CoefSummary:
    median: float
    qn: float


@dataclass
class ReplicationSummary:
    """Medians and cross-replication Qn scales of each estimator's coefficients."""

    label: str
    n: int
    reps: int
    seed: int
    names: dict[str, tuple[str, ...]]
    draws: dict[str, np.ndarray] = field(repr=False)
    p_values: dict[str, float]
    corr_p_ud: float
    failures: dict[str, int]
    errors: dict[str, tuple[str, ...]]

    def coef(self, estimator: str, name: str) -> CoefSummary:
        col = self.draws[estimator][:, self.names[estimator].index(name)]
        if col.size == 0:
            return CoefSummary(math.nan, math.nan)
        qn = stats.qn_scale(col) if col.size >= 2 else 0.0
        return CoefSummary(stats.median(col), qn)

    def table(self) -> dict[str, dict[str, CoefSummary]]:
        return {
            est: {name: self.coef(est, name) for name in names}
            for est, names in self.names.items()
        }

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "n": self.n,
            "reps": self.reps,
            "seed": self.seed,
            "coefficients": {
                est: {k: dataclasses.asdict(v) for k, v in rows.items()}
                for est, rows in self.table().items()
            },
            "p_values": self.p_values,
            "corr_p_ud": self.corr_p_ud,
            "failures": self.failures,
        }


def _replicate(cfg: ScenarioConfig, seed: int, r: int, estimators) -> dict:
    sample = gen_market_sample(cfg, substream(seed, r))
    data = sample.dataset
    out: dict = {"corr": stats.pearson_corr(data.endog[:, 1], sample.u_d)}
    fits = {"ols": ols_equation, "tsls": tsls_fit, "nise": nise_fit}
    for est in estimators:
        try:
            fit = fits[est](data)
        except NiseError as exc:
            out[est] = f"{type(exc).__name__}: {exc}"
            continue
        out[est] = fit.params
        out[est + "_names"] = fit.names
        if est == "tsls":
            if fit.first_stage:
                out["F"] = fit.first_stage[0].p_value
            if fit.j is not None:
                out["J"] = fit.j.p_value
        elif est == "nise" and fit.z is not None:
            out["Z"] = fit.z.p_value
    return out


def _replicate_chunk(args) -> list[dict]:
    cfg, seed, rs, estimators = args
    return [_replicate(cfg, seed, r, estimators) for r in rs]


def run_replications(
    cfg: ScenarioConfig,
    reps: int,
    seed: int,
    estimators=ESTIMATORS,
    workers: int = 1,
) -> ReplicationSummary:
    """Generate ``reps`` samples and fit every requested estimator on each.

    Replication ``r`` draws from substream ``(seed, r)``; results are
    assembled in replication order, so the summary does not depend on
    ``workers``.  Fit failures are counted per estimator, not raised.
    """
    if int(reps) != reps or reps < 1:
        raise ValueError(f"reps must be a positive integer, got {reps}")
    estimators = tuple(e for e in ESTIMATORS if e in set(estimators))
    if workers > 1:
        chunks = np.array_split(np.arange(reps), min(reps, workers * 4))
        jobs = [(cfg, seed, c.tolist(), estimators) for c in chunks if c.size]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = [row for part in pool.map(_replicate_chunk, jobs) for row in part]
    else:
        results = _replicate_chunk((cfg, seed, range(reps), estimators))

    names, draws, failures, errors = {}, {}, {}, {}
    for est in estimators:
        ok = [res for res in results if not isinstance(res[est], str)]
        failures[est] = reps - len(ok)
        errors[est] = tuple(sorted({res[est] for res in results if isinstance(res[est], str)}))
        if ok:
            names[est] = tuple(ok[0][est + "_names"])
            draws[est] = np.vstack([res[est] for res in ok])
        else:
            names[est] = ()
            draws[est] = np.zeros((0, 0))
    p_values = {}
    for key in ("F", "J", "Z"):
        vals = [res[key] for res in results if key in res]
        p_values[key] = stats.median(vals) if vals else math.nan
    corr = stats.median([res["corr"] for res in results])
    return ReplicationSummary(
        cfg.label, cfg.n, reps, seed, names, draws, p_values, corr, failures, errors
    )


_FLOAT_KEYS = {"gamma_p", "intercept", "sd_u"}


def parse_config(text: str, n: int | None = None) -> ScenarioConfig:
    """Build a scenario from ``key = value`` lines.

    Recognized keys: ``scenario`` (built-in starting point, default
    ``base``), ``label``, ``n``, ``demand.<field>`` and ``supply.<field>``
    for ``gamma_p``, ``beta`` (three comma-separated numbers),
    ``intercept``, ``sd_u``; ``exog_in_demand`` and ``instruments``
    (comma-separated names).  Blank lines and ``#`` comments are ignored.
    An explicit ``n`` argument overrides the file.
    """
    entries: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in entries:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        entries[key] = value

    def number(key: str, value: str) -> float:
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key}: not a number: {value!r}") from None

    def names(value: str) -> tuple[str, ...]:
        return tuple(s.strip() for s in value.split(",") if s.strip())

    start = entries.pop("scenario", "base")
    if start not in SCENARIOS:
        raise ConfigError(f"scenario: unknown built-in {start!r}")
    size = entries.pop("n", None)
    if n is None:
        if size is None:
            raise ConfigError("sample size missing: set n in the file or pass it explicitly")
        if not size.isdigit():
            raise ConfigError(f"n: not a positive integer: {size!r}")
        n = int(size)
    base = builtin_scenario(start, n)
    eqs = {"demand": base.demand, "supply": base.supply}
    spec = base.estimation_spec
    label = entries.pop("label", start if not entries else "custom")

    for key, value in entries.items():
        side, _, attr = key.partition(".")
        if side in eqs and attr in _FLOAT_KEYS:
            eqs[side] = dataclasses.replace(eqs[side], **{attr: number(key, value)})
        elif side in eqs and attr == "beta":
            beta = tuple(number(key, v) for v in names(value))
            if len(beta) != 3:
                raise ConfigError(f"{key}: need 3 coefficients, got {len(beta)}")
            eqs[side] = dataclasses.replace(eqs[side], beta=beta)
        elif key in ("exog_in_demand", "instruments"):
            spec = dataclasses.replace(spec, **{key: names(value)})
        else:
            raise ConfigError(f"unknown key {key!r}")
    return ScenarioConfig(eqs["demand"], eqs["supply"], spec, n, label)
