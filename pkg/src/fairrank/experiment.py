"""Seeded experiment harness: generate instances, run rankers across a
sweep grid with repetitions, evaluate metrics, and emit deterministic CSV.

Two protocols:

* ``phi-sweep``  -- fresh instance per iteration; every algorithm runs at
  each constraint tightness phi (the proportion-driven greedy only at
  phi = 1, where its targets coincide with equal representation).
* ``noise-sweep`` -- a fixed ground-truth pool; each iteration flips labels
  by randomized response at rate eta, label-based baselines get the noisy
  groups while probability-based algorithms get the derived posterior.  The
  sweep variable is written to the ``phi`` column.

Rows are sorted by (algorithm, phi, iter) and floats are formatted to six
significant digits, so byte-identical CSV follows from (config, seed) alone.
Wall-clock times are only recorded when ``record_runtime`` is set, because
they would break that determinism contract.
"""

from __future__ import annotations

import concurrent.futures
import csv
import io
import time
from typing import Callable, Literal, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator

from . import metrics as metrics_mod
from . import noiselab
from .core import GroupSample, Instance, Ranking, load_instance, utility
from .errors import (
    ConfigInvalid,
    FairRankError,
    InfeasibleProgram,
    Stuck,
)
from .fairspec import make_fairness_spec, u_phi
from .noiselab import (
    FdrSynthSpec,
    estimate_group_size,
    sample_groups,
    synth_multigroup,
    synth_nonuniform_fdr,
)
from .rankers import (
    csv_greedy,
    gak_detgreedy,
    impute_bayes,
    mc_baseline,
    nresilient,
    sj_sample,
    uncons,
)
from .rng import derive_seed, make_rng
from .swapround import DEFAULT_T

CSV_COLUMNS = [
    "algorithm",
    "phi",
    "iter",
    "seed",
    "rd",
    "sl",
    "prop_rd",
    "ndcg",
    "utility",
    "runtime_ms",
    "status",
]

ALGORITHMS = ("nresilient", "uncons", "csv", "gak", "sj", "mc")


# ---------------------------------------------------------------------------
# Instance generators exposed to the harness and the CLI
# ---------------------------------------------------------------------------


def _gen_fdr_synth(params: dict, n: int, m: int, seed) -> Instance:
    spec = FdrSynthSpec(m=m, n=n, **params)
    return synth_nonuniform_fdr(spec, seed)


def _gen_multigroup(params: dict, n: int, m: int, seed) -> Instance:
    return synth_multigroup(m=m, n=n, seed=seed, **params)


def _gen_half_half(params: dict, n: int, m: int, seed) -> Instance:
    p = int(params.get("p", 2))
    rng = make_rng(seed)
    P = noiselab.half_half_instance(m, p)
    w = rng.random(m)
    truth = sample_groups(P, "disjoint" if p == 2 else "independent-marginals", rng)
    structure = "disjoint" if p == 2 else "independent-marginals"
    return Instance.from_values(w, n, P, structure=structure, truth=truth)


def _gen_intersectional(params: dict, n: int, m: int, seed) -> Instance:
    attrs = int(params.get("attributes", 2))
    rng = make_rng(seed)
    marginals = [rng.random(m) for _ in range(attrs)]
    P = noiselab.intersect_marginals(marginals)
    w = rng.random(m)
    truth = sample_groups(P, "disjoint", rng)
    return Instance.from_values(w, n, P, structure="disjoint", truth=truth)


def _gen_adversarial(params: dict, n: int, m: int, seed) -> Instance:
    from .fairspec import u_equal_representation

    p = int(params.get("p", 4))
    k = int(params.get("k", n))
    U = u_equal_representation(n, p)
    P = noiselab.adversarial_lower_bound_instance(U, k, m, n)
    rng = make_rng(seed)
    w = rng.random(m)
    truth = sample_groups(P, "independent-marginals", rng)
    return Instance.from_values(w, n, P, structure="independent-marginals", truth=truth)


def _gen_imputation_failure(params: dict, n: int, m: int, seed) -> Instance:
    kind = params.get("kind", "bayes")
    inst = noiselab.imputation_failure_instance(
        kind, n, beta=float(params.get("beta", 0.01)), phi=float(params.get("phi", 0.05))
    )
    truth = sample_groups(inst.P, "disjoint", seed)
    return Instance(
        m=inst.m, n=inst.n, p=inst.p, W=inst.W, P=inst.P, structure="disjoint", truth=truth
    )


def _gen_exp_gap(params: dict, n: int, m: int, seed) -> Instance:
    inst = noiselab.exp_constraint_gap_instance(m, n)
    truth = sample_groups(inst.P, "disjoint", seed)
    return Instance(
        m=inst.m, n=inst.n, p=inst.p, W=inst.W, P=inst.P, structure="disjoint", truth=truth
    )


GENERATORS: dict[str, Callable] = {
    "fdr-synth": _gen_fdr_synth,
    "multi-group": _gen_multigroup,
    "half-half": _gen_half_half,
    "intersectional": _gen_intersectional,
    "adversarial-lb": _gen_adversarial,
    "imputation-failure": _gen_imputation_failure,
    "exp-gap": _gen_exp_gap,
}


def generate_instance(name: str, params: dict, n: int, m: int, seed) -> Instance:
    if name not in GENERATORS:
        raise ConfigInvalid(f"unknown generator {name!r}; known: {sorted(GENERATORS)}")
    return GENERATORS[name](dict(params), n, m, seed)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


class InstanceSource(BaseModel):
    generator: Optional[str] = None
    params: dict = Field(default_factory=dict)
    path: Optional[str] = None

    def validate_source(self) -> None:
        if (self.generator is None) == (self.path is None):
            raise ConfigInvalid("instance source needs exactly one of generator/path")
        if self.generator is not None and self.generator not in GENERATORS:
            raise ConfigInvalid(f"unknown generator {self.generator!r}")


class NoisePool(BaseModel):
    """Ground-truth pool for the noise sweep."""

    majority_fraction: float = 0.59
    value_exponents: tuple[float, float] = (0.55, 1.5)
    size_mode: Literal["true", "estimated"] = "true"


class ExperimentConfig(BaseModel):
    instance: InstanceSource = Field(default_factory=lambda: InstanceSource(generator="fdr-synth"))
    algorithms: list[str] = Field(default_factory=lambda: list(ALGORITHMS))
    protocol: Literal["phi-sweep", "noise-sweep"] = "phi-sweep"
    phi_grid: list[float] = Field(default_factory=lambda: [2.0, 1.8, 1.6, 1.4, 1.2, 1.1, 1.0])
    eta_grid: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.3, 0.4])
    iterations: int = 1
    m: int = 500
    n: int = 25
    seed: int = 0
    gamma_mode: str = "heuristic"
    c: float = 1.5
    delta: float = 0.1
    d: float = 4.0
    psi: Optional[float] = None
    t: int = DEFAULT_T
    lp_method: Literal["auto", "simplex", "highs"] = "auto"
    noise_pool: NoisePool = Field(default_factory=NoisePool)
    record_runtime: bool = False
    threads: int = 1

    @field_validator("iterations")
    @classmethod
    def _iters(cls, v):
        if v < 1:
            raise ValueError("iterations must be >= 1")
        return v

    def validated(self) -> "ExperimentConfig":
        self.instance.validate_source()
        unknown = set(self.algorithms) - set(ALGORITHMS)
        if unknown:
            raise ConfigInvalid(f"unknown algorithms {sorted(unknown)}")
        if self.protocol == "phi-sweep" and not self.phi_grid:
            raise ConfigInvalid("phi grid must be nonempty")
        if any(phi < 1.0 for phi in self.phi_grid):
            raise ConfigInvalid("phi grid values must be >= 1")
        if self.threads < 1:
            raise ConfigInvalid("threads must be >= 1")
        return self


# ---------------------------------------------------------------------------
# Work units
# ---------------------------------------------------------------------------


def _blank_row(algo: str, x: float, it: int, seed: int, status: str) -> dict:
    return {
        "algorithm": algo,
        "phi": x,
        "iter": it,
        "seed": seed,
        "rd": None,
        "sl": None,
        "prop_rd": None,
        "ndcg": None,
        "utility": None,
        "runtime_ms": None,
        "status": status,
    }


def _metric_row(
    cfg: ExperimentConfig,
    algo: str,
    x: float,
    it: int,
    seed: int,
    r: Ranking,
    inst: Instance,
    truth: GroupSample,
    elapsed_ms: float,
) -> dict:
    rep = metrics_mod.report(r, inst, truth)
    return {
        "algorithm": algo,
        "phi": x,
        "iter": it,
        "seed": seed,
        "rd": rep.rd,
        "sl": rep.sl,
        "prop_rd": rep.prop_rd,
        "ndcg": rep.ndcg,
        "utility": rep.raw_utility,
        "runtime_ms": elapsed_ms if cfg.record_runtime else None,
        "status": "ok",
    }


def _run_algo(cfg: ExperimentConfig, algo: str, inst: Instance, spec, U, phi, imputed, seed):
    rng = make_rng(seed)
    if algo == "nresilient":
        return nresilient(inst, spec, rng, t=cfg.t, method=cfg.lp_method)
    if algo == "uncons":
        return uncons(inst)
    if algo == "csv":
        return csv_greedy(inst, imputed, U)
    if algo == "gak":
        return gak_detgreedy(inst, imputed, np.full(inst.p, 1.0 / inst.p))
    if algo == "sj":
        return sj_sample(inst, imputed, U, rng, method=cfg.lp_method)
    if algo == "mc":
        return mc_baseline(inst, spec, phi, rng, method=cfg.lp_method)
    raise ConfigInvalid(f"unknown algorithm {algo!r}")


def _phi_unit(cfg: ExperimentConfig, xi: int, it: int) -> list[dict]:
    phi = cfg.phi_grid[xi]
    # the instance and truth depend on the iteration only, so every phi sees
    # the same draw (paired comparisons; phi-independent algorithms produce
    # identical rows across the grid)
    iter_seed = derive_seed(cfg.seed, it)
    gen_rng, truth_rng = np.random.SeedSequence(iter_seed).spawn(2)
    algo_rngs = np.random.SeedSequence(derive_seed(cfg.seed, it, xi + 1)).spawn(len(ALGORITHMS))
    unit_seed = iter_seed
    if cfg.instance.path is not None:
        inst = load_instance(cfg.instance.path)
    else:
        inst = generate_instance(cfg.instance.generator, cfg.instance.params, cfg.n, cfg.m, gen_rng)
    truth = inst.truth if inst.truth is not None else sample_groups(inst.P, inst.structure, truth_rng)
    U = u_phi(inst.n, inst.p, min(phi, float(inst.p)))
    spec = make_fairness_spec(
        U, cfg.gamma_mode, c=cfg.c, delta=cfg.delta, d=cfg.d, psi=cfg.psi
    )
    imputed = impute_bayes(inst.P)
    rows = []
    for ai, algo in enumerate(cfg.algorithms):
        if algo == "gak" and abs(phi - 1.0) > 1e-12:
            # proportion targets only coincide with the constraint family at
            # phi = 1; keep the row so the grid stays rectangular
            rows.append(_blank_row(algo, phi, it, unit_seed, "skipped"))
            continue
        t0 = time.perf_counter()
        try:
            r = _run_algo(cfg, algo, inst, spec, U, phi, imputed, algo_rngs[ai])
            elapsed = (time.perf_counter() - t0) * 1000.0
            rows.append(_metric_row(cfg, algo, phi, it, unit_seed, r, inst, truth, elapsed))
        except InfeasibleProgram:
            rows.append(_blank_row(algo, phi, it, unit_seed, "infeasible"))
        except Stuck:
            rows.append(_blank_row(algo, phi, it, unit_seed, "stuck"))
        except FairRankError as exc:
            rows.append(_blank_row(algo, phi, it, unit_seed, f"error:{type(exc).__name__}"))
    return rows


def _noise_pool(cfg: ExperimentConfig, iter_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Ground-truth pool for one noise-sweep iteration: labels and values,
    redrawn per iteration and shared across the eta grid."""
    rng = make_rng(derive_seed(iter_seed, 0xF00D))
    g1 = cfg.noise_pool.majority_fraction
    e1, e2 = cfg.noise_pool.value_exponents
    labels = (rng.random(cfg.m) >= g1).astype(int)  # 0 = majority group
    w = np.where(labels == 0, rng.random(cfg.m) ** e1, rng.random(cfg.m) ** e2)
    return labels, w


def _noise_unit(cfg: ExperimentConfig, xi: int, it: int) -> list[dict]:
    eta = cfg.eta_grid[xi]
    iter_seed = derive_seed(cfg.seed, it)
    unit_seed = iter_seed
    algo_rngs = np.random.SeedSequence(derive_seed(cfg.seed, it, xi + 1)).spawn(len(ALGORITHMS))
    labels, w = _noise_pool(cfg, iter_seed)
    truth = GroupSample.from_labels(labels, 2)
    params = noiselab.RandomizedResponseParams(eta=eta)
    if eta == 0.0:
        noisy, P_hat = truth, np.column_stack([1.0 - labels, labels]).astype(float)
    else:
        # one uniform draw per item, shared across the eta grid, so flips are
        # monotone in eta within an iteration
        flips = make_rng(iter_seed).random(cfg.m) < eta
        noisy = GroupSample.from_labels(np.where(flips, 1 - labels, labels), 2)
        if cfg.noise_pool.size_mode == "estimated":
            n1, n2 = np.bincount(noisy.labels(), minlength=2).astype(float)
            a1 = estimate_group_size(n1, n2, eta)
            a2 = estimate_group_size(n2, n1, eta)
            sizes = [a1 / (1 - eta), a2 / (1 - eta)]
        else:
            sizes = np.bincount(labels, minlength=2).astype(float)
        P_hat = noiselab.posterior_from_noisy(noisy, params, sizes)
    inst = Instance.from_values(w, cfg.n, P_hat, structure="disjoint", truth=truth)
    U = u_phi(cfg.n, 2, 1.0)
    spec = make_fairness_spec(U, cfg.gamma_mode, c=cfg.c, delta=cfg.delta, d=cfg.d, psi=cfg.psi)
    rows = []
    for ai, algo in enumerate(cfg.algorithms):
        t0 = time.perf_counter()
        try:
            r = _run_algo(cfg, algo, inst, spec, U, 1.0, noisy, algo_rngs[ai])
            elapsed = (time.perf_counter() - t0) * 1000.0
            rows.append(_metric_row(cfg, algo, eta, it, unit_seed, r, inst, truth, elapsed))
        except InfeasibleProgram:
            rows.append(_blank_row(algo, eta, it, unit_seed, "infeasible"))
        except Stuck:
            rows.append(_blank_row(algo, eta, it, unit_seed, "stuck"))
        except FairRankError as exc:
            rows.append(_blank_row(algo, eta, it, unit_seed, f"error:{type(exc).__name__}"))
    return rows


def _unit(args: tuple) -> list[dict]:
    cfg_data, xi, it = args
    cfg = ExperimentConfig(**cfg_data)
    if cfg.protocol == "noise-sweep":
        return _noise_unit(cfg, xi, it)
    return _phi_unit(cfg, xi, it)


# ---------------------------------------------------------------------------
# Driver and CSV output
# ---------------------------------------------------------------------------


def run_experiment(cfg: ExperimentConfig) -> list[dict]:
    """All rows for the configured sweep, sorted by (algorithm, phi, iter)."""
    cfg = cfg.validated()
    grid = cfg.eta_grid if cfg.protocol == "noise-sweep" else cfg.phi_grid
    units = [(cfg.model_dump(), xi, it) for xi in range(len(grid)) for it in range(cfg.iterations)]
    rows: list[dict] = []
    if cfg.threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.threads) as pool:
            for out in pool.map(_unit, units, chunksize=4):
                rows.extend(out)
    else:
        for u in units:
            rows.extend(_unit(u))
    rows.sort(key=lambda r: (r["algorithm"], r["phi"], r["iter"]))
    return rows


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in CSV_COLUMNS])
    return buf.getvalue()


def write_csv(rows: list[dict], path: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(rows_to_csv(rows))
