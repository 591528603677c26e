"""FastAPI service exposing the ranking toolkit.

Endpoints wrap the core package one-to-one: instance generation, ranking,
metric evaluation, and full experiment sweeps.  Domain failures map to
structured 422 responses carrying the exception class name.
"""

from __future__ import annotations

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse

from .. import __version__
from ..core import (
    GroupSample,
    Ranking,
    instance_from_dict,
    instance_to_dict,
    utility,
)
from ..errors import FairRankError
from ..experiment import generate_instance, rows_to_csv, run_experiment
from ..fairspec import make_fairness_spec, u_equal_representation, u_phi, u_proportional
from ..metrics import report
from ..noiselab import sample_groups
from ..rankers import (
    csv_greedy,
    gak_detgreedy,
    impute_bayes,
    mc_baseline,
    nresilient,
    sj_sample,
    uncons,
)
from .schemas import (
    EvaluateRequest,
    ExperimentRequest,
    ExperimentResponse,
    GenerateRequest,
    InstancePayload,
    MetricReportPayload,
    RankRequest,
    RankResponse,
)

app = FastAPI(title="fairrank", version="0.1.0")


@app.exception_handler(FairRankError)
async def _domain_error(_, exc: FairRankError):
    return JSONResponse(
        status_code=422,
        content={"error": type(exc).__name__, "message": str(exc)},
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/generate", response_model=InstancePayload)
def generate(req: GenerateRequest):
    inst = generate_instance(req.generator, req.params, req.n, req.m, req.seed)
    return instance_to_dict(inst)


def _build_spec(inst, fp):
    if fp.u_mode == "phi":
        U = u_phi(inst.n, inst.p, fp.phi)
    elif fp.u_mode == "equal":
        U = u_equal_representation(inst.n, inst.p)
    else:
        sizes = fp.group_sizes
        if sizes is None:
            sizes = np.asarray(inst.P, dtype=float).sum(axis=0)
        U = u_proportional(inst.n, sizes, inst.m)
    return U, make_fairness_spec(
        U,
        fp.gamma_mode,
        c=fp.c,
        delta=fp.delta,
        d=fp.d,
        psi=fp.psi,
        gamma=fp.gamma,
        v=np.asarray(fp.v, dtype=float) if fp.v is not None else None,
    )


@app.post("/rank", response_model=RankResponse)
def rank(req: RankRequest):
    inst = instance_from_dict(req.instance.model_dump())
    U, spec = _build_spec(inst, req.fairness)
    algo = req.algorithm
    if algo == "nresilient":
        r = nresilient(inst, spec, req.seed, t=req.fairness.t, method=req.lp_method)
    elif algo == "uncons":
        r = uncons(inst)
    elif algo == "csv":
        r = csv_greedy(inst, impute_bayes(inst.P), U)
    elif algo == "gak":
        r = gak_detgreedy(inst, impute_bayes(inst.P), np.full(inst.p, 1.0 / inst.p))
    elif algo == "sj":
        r = sj_sample(inst, impute_bayes(inst.P), U, req.seed, method=req.lp_method)
    else:
        r = mc_baseline(inst, spec, req.fairness.phi, req.seed, method=req.lp_method)
    return RankResponse(
        slots=[s + 1 for s in r.slots], m=r.m, n=r.n, utility=utility(r, inst.W)
    )


@app.post("/evaluate", response_model=MetricReportPayload)
def evaluate(req: EvaluateRequest):
    inst = instance_from_dict(req.instance.model_dump())
    r = Ranking(slots=tuple(s - 1 for s in req.slots), m=inst.m)
    if req.truth is not None:
        truth = GroupSample(np.asarray(req.truth))
    elif inst.truth is not None:
        truth = inst.truth
    else:
        truth = sample_groups(inst.P, inst.structure, req.truth_seed)
    rep = report(r, inst, truth)
    return MetricReportPayload(**rep.to_dict())


@app.post("/experiment", response_model=ExperimentResponse)
def experiment(req: ExperimentRequest):
    rows = run_experiment(req.config)
    return ExperimentResponse(csv=rows_to_csv(rows), rows=len(rows))
