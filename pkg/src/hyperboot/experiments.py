"""Monte Carlo percolation experiments with deterministic parallel streams.

Every trial owns a counter-based substream keyed by (master seed, trial
index), so results never depend on execution order or worker count; the
initial-infection and coin uniforms are drawn once per trial and compared
against the thresholds p and q afterwards, which couples every evaluation
of the percolation profile monotonically across p, q and c.  Percolation
per trial is decided by the deterministic closure on the sampled success
set; the process pipeline is available behind a flag for when a trace is
wanted (the two agree trial-for-trial only in distribution, but both are
exact Bernoulli estimators of the same event).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from multiprocessing import get_context
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import __version__
from . import rng as rng_mod
from .builders import SizeGuardError, bootstrap_lift, complete_uniform, load_pattern
from .census import count_pendant_stars
from .engine import closure
from .hypergraph import Hypergraph, build_hypergraph
from .processes import (CoinOracle, ProcessState, drain, full_pipeline,
                        phase1_run, subcritical_round, supercritical_round,
                        PHASE2_SUB, PHASE2_SUPER, QUIESCENT)
from .theory import (BoundaryError, Criticality, ModelParams,
                     classify_criticality, derive_constants, star_density)

EXACT_ORACLE_LIMIT = 22      # max n + |E| for the brute-force oracle
WILSON_Z = 1.959963984540054  # two-sided 95% normal quantile

MODES = ("percolation_prob", "pc_bisect", "scan", "trajectory")


def wilson_interval(successes: int, trials: int,
                    z: float = WILSON_Z) -> tuple:
    """Wilson score interval for a binomial fraction."""
    if trials < 1:
        raise ValueError("interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes {successes} outside 0..{trials}")
    f = successes / trials
    denom = 1.0 + z * z / trials
    center = (f + z * z / (2 * trials)) / denom
    half = z * math.sqrt(f * (1 - f) / trials
                         + z * z / (4 * trials * trials)) / denom
    return (max(0.0, center - half), min(1.0, center + half))


# -- model recipes and experiment specs ---------------------------------------

def _hypergraph_from_dict(obj: dict) -> Hypergraph:
    return build_hypergraph(int(obj["n"]), int(obj["r"]), obj["edges"])


@dataclass(frozen=True)
class ModelRecipe:
    """How to obtain the host hypergraph: inline, complete, or a lift of K_n.

    kind "inline" embeds the hypergraph itself; "complete" is the complete
    k-uniform hypergraph on n vertices; "lift" builds the pattern-copy
    hypergraph over the complete graph K_n (vertices are K_n's edges).
    The pattern is a library name or an inline hypergraph.
    """
    kind: str
    n: Optional[int] = None
    k: Optional[int] = None
    pattern: Union[str, Hypergraph, None] = None
    hypergraph: Optional[Hypergraph] = None

    def __post_init__(self):
        if self.kind == "inline":
            if self.hypergraph is None:
                raise ValueError("inline recipe needs a hypergraph")
        elif self.kind == "complete":
            if self.n is None or self.k is None:
                raise ValueError("complete recipe needs n and k")
        elif self.kind == "lift":
            if self.n is None or self.pattern is None:
                raise ValueError("lift recipe needs n and a pattern")
        else:
            raise ValueError(f"unknown recipe kind {self.kind!r}")

    def build(self) -> Hypergraph:
        if self.kind == "inline":
            return self.hypergraph
        if self.kind == "complete":
            return complete_uniform(self.n, self.k)
        pat = (load_pattern(self.pattern) if isinstance(self.pattern, str)
               else self.pattern)
        return bootstrap_lift(complete_uniform(self.n, 2), pat)

    def to_dict(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.n is not None:
            out["n"] = self.n
        if self.k is not None:
            out["k"] = self.k
        if isinstance(self.pattern, str):
            out["pattern"] = self.pattern
        elif isinstance(self.pattern, Hypergraph):
            out["pattern"] = {"n": self.pattern.n, "r": self.pattern.r,
                              "edges": [list(e) for e in self.pattern.edges()]}
        if self.hypergraph is not None:
            out["hypergraph"] = {
                "n": self.hypergraph.n, "r": self.hypergraph.r,
                "edges": [list(e) for e in self.hypergraph.edges()]}
        return out

    @staticmethod
    def from_dict(obj: dict) -> "ModelRecipe":
        pattern = obj.get("pattern")
        if isinstance(pattern, dict):
            pattern = _hypergraph_from_dict(pattern)
        hg = obj.get("hypergraph")
        return ModelRecipe(
            kind=obj["kind"],
            n=obj.get("n"), k=obj.get("k"), pattern=pattern,
            hypergraph=_hypergraph_from_dict(hg) if hg is not None else None)


@dataclass(frozen=True)
class ExperimentSpec:
    """A complete, serializable description of one experiment run.

    trials is the trial count per evaluation (percolation_prob, pc_bisect,
    scan) or the number of recorded traces (trajectory).  grid holds the
    initial-density constants c to scan.  The worker count is deliberately
    not part of the spec: results must not depend on it.
    """
    model: ModelRecipe
    params: ModelParams
    trials: int
    seed: int
    mode: str
    grid: tuple = ()
    tol: float = 0.01
    trace_stride: Optional[int] = None
    star_indices: tuple = ()
    star_vertices: int = 0

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode {self.mode!r} not one of {MODES}")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.mode == "scan" and not self.grid:
            raise ValueError("scan mode needs a nonempty grid")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must fit in 64 bits")
        if self.tol <= 0:
            raise ValueError("tol must be positive")

    def to_dict(self) -> dict:
        out = {
            "model": self.model.to_dict(),
            "params": self.params.to_dict(),
            "trials": self.trials,
            "seed": self.seed,
            "mode": self.mode,
            "tol": self.tol,
        }
        if self.grid:
            out["grid"] = list(self.grid)
        if self.trace_stride is not None:
            out["trace_stride"] = self.trace_stride
        if self.star_indices:
            out["star_indices"] = [list(ij) for ij in self.star_indices]
            out["star_vertices"] = self.star_vertices
        return out

    @staticmethod
    def from_dict(obj: dict) -> "ExperimentSpec":
        par = obj["params"]
        params = ModelParams(
            r=int(par["r"]), c=float(par["c"]), alpha=float(par["alpha"]),
            d=float(par["d"]), K=float(par.get("K", 100.0)),
            n_vertices=par.get("n_vertices"))
        return ExperimentSpec(
            model=ModelRecipe.from_dict(obj["model"]),
            params=params,
            trials=int(obj["trials"]),
            seed=int(obj["seed"]),
            mode=obj["mode"],
            grid=tuple(float(c) for c in obj.get("grid", ())),
            tol=float(obj.get("tol", 0.01)),
            trace_stride=obj.get("trace_stride"),
            star_indices=tuple(tuple(int(x) for x in ij)
                               for ij in obj.get("star_indices", ())),
            star_vertices=int(obj.get("star_vertices", 0)))


# -- Monte Carlo percolation probability --------------------------------------

@dataclass(frozen=True)
class MCResult:
    p: float
    q: float
    trials: int
    successes: int

    @property
    def fraction(self) -> float:
        return self.successes / self.trials

    @property
    def ci(self) -> tuple:
        return wilson_interval(self.successes, self.trials)

    def to_dict(self) -> dict:
        lo, hi = self.ci
        return {"p": self.p, "q": self.q, "trials": self.trials,
                "successes": self.successes, "fraction": self.fraction,
                "ci_low": lo, "ci_high": hi}


_MC_CTX: dict = {}


def _trial_percolates(H: Hypergraph, p: float, q: float, seed: int,
                      trial: int) -> bool:
    uv = rng_mod.substream(seed, rng_mod.TRIAL, trial,
                           rng_mod.VERTEX_DRAW).random(H.n)
    init = np.flatnonzero(uv < p)
    ue = rng_mod.substream(seed, rng_mod.TRIAL, trial,
                           rng_mod.EDGE_COIN).random(H.num_edges)
    successes = np.flatnonzero(ue < q)
    return len(closure(H, init, successes)) == H.n


def _pipeline_seed(seed: int, trial: int) -> int:
    return int(rng_mod.stream_key(seed, rng_mod.TRIAL, trial)[0])


def _trial_pipeline(H: Hypergraph, params: ModelParams, seed: int,
                    trial: int) -> bool:
    return full_pipeline(H, params, _pipeline_seed(seed, trial)).percolated


def _mc_chunk(bounds: tuple) -> int:
    lo, hi = bounds
    ctx = _MC_CTX
    if ctx["pipeline"]:
        return sum(_trial_pipeline(ctx["H"], ctx["params"], ctx["seed"], k)
                   for k in range(lo, hi))
    return sum(_trial_percolates(ctx["H"], ctx["p"], ctx["q"],
                                 ctx["seed"], k)
               for k in range(lo, hi))


def _chunk_bounds(trials: int, parts: int) -> list:
    parts = max(1, min(parts, trials))
    size, extra = divmod(trials, parts)
    bounds, lo = [], 0
    for i in range(parts):
        hi = lo + size + (1 if i < extra else 0)
        bounds.append((lo, hi))
        lo = hi
    return bounds


def percolation_probability_mc(H: Hypergraph, p: float, q: float,
                               trials: int, seed: int, workers: int = 1,
                               use_pipeline: bool = False,
                               params: Optional[ModelParams] = None) -> MCResult:
    """Fraction of independent trials whose sampled instance percolates.

    A trial draws the initial infection Bernoulli(p) per vertex and a coin
    Bernoulli(q) per edge, then asks the closure whether everything gets
    infected.  With use_pipeline=True each trial instead runs the two-phase
    process end to end (params required; p and q must then match it).
    Worker processes split the trial range; totals are sums, so any split
    gives the identical result.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    for name, val in (("p", p), ("q", q)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"probability {name}={val} outside [0, 1]")
    if use_pipeline and params is None:
        raise ValueError("pipeline trials need model params")
    global _MC_CTX
    _MC_CTX = {"H": H, "p": p, "q": q, "seed": seed,
               "pipeline": use_pipeline, "params": params}
    bounds = _chunk_bounds(trials, workers)
    if len(bounds) == 1:
        successes = _mc_chunk(bounds[0])
    else:
        # fork inherits _MC_CTX; no per-task pickling of the host
        with ProcessPoolExecutor(max_workers=len(bounds),
                                 mp_context=get_context("fork")) as pool:
            successes = sum(pool.map(_mc_chunk, bounds))
    return MCResult(p=p, q=q, trials=trials, successes=int(successes))


# -- exact brute-force oracle --------------------------------------------------

def _closure_bits(inf: int, masks: Sequence[int]) -> int:
    changed = True
    while changed:
        changed = False
        for em in masks:
            h = em & ~inf
            if h and not (h & (h - 1)):
                inf |= h
                changed = True
    return inf


def exact_percolation_probability(H: Hypergraph, p: float, q: float) -> float:
    """Exact percolation probability by summing over all (I0, edge-set) pairs.

    Weighted by the Bernoulli masses of the 2^n initial sets and 2^|E| coin
    outcomes; each term is decided by a bitmask closure.  Guarded to
    n + |E| <= 22 because the cost is exponential in both.
    """
    n, m = H.n, H.num_edges
    if n + m > EXACT_ORACLE_LIMIT:
        raise SizeGuardError(
            f"exact oracle needs n + |E| <= {EXACT_ORACLE_LIMIT}, "
            f"got {n} + {m}")
    for name, val in (("p", p), ("q", q)):
        if not 0.0 <= val <= 1.0:
            raise ValueError(f"probability {name}={val} outside [0, 1]")
    masks = [0] * m
    for eid in range(m):
        for v in H.edge(eid):
            masks[eid] |= 1 << v
    full = (1 << n) - 1
    total = 0.0
    for i0 in range(1 << n):
        k = bin(i0).count("1")
        pw = p ** k * (1.0 - p) ** (n - k)
        if pw == 0.0:
            continue
        if i0 == full:
            total += pw
            continue
        if _closure_bits(i0, masks) != full:
            continue    # even every coin succeeding cannot finish the job
        acc = 0.0
        for sbits in range(1 << m):
            s = bin(sbits).count("1")
            qw = q ** s * (1.0 - q) ** (m - s)
            if qw == 0.0:
                continue
            sel = [masks[j] for j in range(m) if sbits >> j & 1]
            if _closure_bits(i0, sel) == full:
                acc += qw
        total += pw * acc
    return total


# -- critical-density estimation -----------------------------------------------

@dataclass(frozen=True)
class PcEstimate:
    """Bisection output: a point estimate inside a surviving p-interval.

    ci_low/ci_high is the bracket still containing the threshold when the
    run stopped; stop_reason is "tol" when the bracket shrank below
    tolerance and "ambiguous" when the Wilson interval of the last
    evaluation straddled 1/2, in which case p_hat is that evaluation point
    itself.  evaluations holds every Monte Carlo evaluation in the order
    performed; each is reproducible from (seed, p) alone.
    """
    p_hat: float
    ci_low: float
    ci_high: float
    scaled: float
    evaluations: tuple
    stop_reason: str
    warnings: tuple = ()

    def to_dict(self) -> dict:
        return {
            "p_hat": self.p_hat,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "scaled": self.scaled,
            "stop_reason": self.stop_reason,
            "warnings": list(self.warnings),
            "evaluations": [ev.to_dict() for ev in self.evaluations],
        }


def _monotonicity_warnings(evals: Sequence[MCResult]) -> tuple:
    rows = sorted(evals, key=lambda ev: ev.p)
    out = []
    for a, b in zip(rows, rows[1:]):
        if a.ci[0] > b.ci[1]:
            out.append(
                f"fraction at p={a.p:.6g} exceeds fraction at p={b.p:.6g} "
                "beyond the 95% intervals")
    return tuple(out)


def estimate_pc_bisection(H: Hypergraph, q: float, seed: int,
                          trials: int = 50, tol: float = 0.01,
                          d: Optional[float] = None,
                          workers: int = 1) -> PcEstimate:
    """Bisect the initial density for the 1/2 percolation probability level.

    Percolation probability is nondecreasing in p (the trials reuse one set
    of uniforms across evaluations, so the empirical profile is monotone by
    construction, not just in expectation).  The endpoints are pinned at
    probability 0 and 1 and never evaluated.  scaled reports
    p_hat * d^(1/(r-1)) with d defaulting to the host's maximum degree.
    """
    if trials < 20:
        raise ValueError("bisection needs at least 20 trials per evaluation")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"probability q={q} outside [0, 1]")
    if tol <= 0:
        raise ValueError("tol must be positive")
    if d is None:
        d = float(H.max_degree())
    lo, hi = 0.0, 1.0
    evals = []
    stop_reason = "tol"
    p_hat = None
    while hi - lo > tol:
        mid = (lo + hi) / 2.0
        res = percolation_probability_mc(H, mid, q, trials, seed, workers)
        evals.append(res)
        ci_lo, ci_hi = res.ci
        if ci_lo <= 0.5 <= ci_hi:
            stop_reason = "ambiguous"
            p_hat = mid
            break
        if res.fraction >= 0.5:
            hi = mid
        else:
            lo = mid
    if p_hat is None:
        p_hat = (lo + hi) / 2.0
    scale = d ** (1.0 / (H.r - 1)) if d > 0 else float("nan")
    return PcEstimate(
        p_hat=p_hat, ci_low=lo, ci_high=hi, scaled=p_hat * scale,
        evaluations=tuple(evals), stop_reason=stop_reason,
        warnings=_monotonicity_warnings(evals))


# -- threshold scans -----------------------------------------------------------

@dataclass(frozen=True)
class ScanRow:
    c: float
    result: MCResult
    predicted: str

    def to_dict(self) -> dict:
        out = self.result.to_dict()
        out["c"] = self.c
        out["predicted"] = self.predicted
        return out


def threshold_scan(H: Hypergraph, grid: Iterable[float], alpha: float,
                   d: float, trials: int, seed: int,
                   workers: int = 1, K: float = 100.0) -> list:
    """Percolation fraction at p = c.d^(-1/(r-1)) for each c in the grid.

    Each row carries the side of the critical constant the theory predicts
    for that c ("subcritical", "supercritical", or "boundary" inside the
    numerical dead-band).  All rows share trial substreams, so the fractions
    are nondecreasing in c exactly.
    """
    cs = [float(c) for c in grid]
    if not cs:
        raise ValueError("scan needs a nonempty grid")
    rows = []
    for c in cs:
        params = ModelParams(r=H.r, c=c, alpha=alpha, d=d, K=K)
        try:
            predicted = classify_criticality(params).value
        except BoundaryError:
            predicted = "boundary"
        res = percolation_probability_mc(H, params.p, params.q, trials,
                                         seed, workers)
        rows.append(ScanRow(c=c, result=res, predicted=predicted))
    return rows


# -- trajectory recording ------------------------------------------------------

@dataclass(frozen=True)
class StarSample:
    """Mean pendant-star count over sampled vertices at one time point."""
    t: float
    i: int
    j: int
    mean: float
    predicted: float
    vertices: int

    def to_dict(self) -> dict:
        return {"t": self.t, "i": self.i, "j": self.j, "mean": self.mean,
                "predicted": self.predicted, "vertices": self.vertices}


@dataclass(frozen=True)
class TrajectoryTrace:
    index: int
    seed: int
    percolated: bool
    infected_count: int
    rows: tuple
    stars: tuple = ()


def _star_samples(H: Hypergraph, infected, live, t: float,
                  indices: Sequence, sample: np.ndarray,
                  params: ModelParams) -> list:
    out = []
    for (i, j) in indices:
        mean = float(np.mean([
            count_pendant_stars(H, infected, int(v), i, j, active=live)
            for v in sample]))
        pred = (star_density(t, i, j, params)
                * params.d ** (1.0 - i / (params.r - 1)))
        out.append(StarSample(t=t, i=i, j=j, mean=mean, predicted=pred,
                              vertices=len(sample)))
    return out


def record_trajectory(H: Hypergraph, params: ModelParams, seed: int,
                      index: int = 0, trace_stride: Optional[int] = None,
                      star_indices: Sequence = (),
                      star_vertices: int = 0) -> TrajectoryTrace:
    """One full process run with its trace, plus optional star sampling.

    The run follows the standard pipeline stream layout, so the trace is
    identical to what the pipeline with the same derived seed would emit.
    Star counts are taken against the live (not yet revealed) edges at the
    start and at the end of the single-reveal phase.
    """
    trial_seed = _pipeline_seed(seed, index)
    bound = params.bind(H.n)
    if bound.p > 1.0 or bound.q > 1.0:
        raise ValueError("bound parameters leave [0, 1]")
    constants = derive_constants(bound)
    vertex_stream = rng_mod.substream(trial_seed, rng_mod.VERTEX_DRAW)
    choice_stream = rng_mod.substream(trial_seed, rng_mod.PROCESS_CHOICE)
    coins = CoinOracle(bound.q, trial_seed, rng_mod.EDGE_COIN)
    init = np.flatnonzero(vertex_stream.random(H.n) < bound.p).astype(np.int64)
    ps = ProcessState(H, init, coins, choice_stream, bound)
    stars = []
    sample = None
    if star_vertices > 0 and star_indices:
        picker = rng_mod.substream(trial_seed, rng_mod.INSTANCE)
        sample = picker.choice(H.n, size=min(star_vertices, H.n),
                               replace=False)
        stars.extend(_star_samples(H, ps.state.infected, None, 0.0,
                                   star_indices, sample, bound))
    if trace_stride is None:
        trace_stride = max(1, constants.phases.steps // 50)
    quiet = phase1_run(ps, constants.phases.steps, trace_stride)
    if sample is not None:
        live = np.ones(H.num_edges, dtype=bool)
        live[ps.sampled] = False
        stars.extend(_star_samples(H, ps.state.infected, live,
                                   ps.m / H.n, star_indices, sample, bound))
    if not quiet:
        subcritical = constants.criticality is Criticality.SUBCRITICAL
        round_fn = subcritical_round if subcritical else supercritical_round
        tag = PHASE2_SUB if subcritical else PHASE2_SUPER
        for _ in range(constants.phases.rounds):
            round_fn(ps)
            ps.record(tag)
            if not ps.state.open_count:
                break
        drain(ps)
        ps.record(QUIESCENT)
    return TrajectoryTrace(
        index=index, seed=trial_seed,
        percolated=ps.state.infected_count == H.n,
        infected_count=ps.state.infected_count,
        rows=tuple(ps.trace), stars=tuple(stars))


# -- reports -------------------------------------------------------------------

def _constants_dict(params: ModelParams, n_vertices: int) -> dict:
    try:
        return derive_constants(params.bind(n_vertices)).to_dict()
    except (BoundaryError, ValueError, RuntimeError) as exc:
        return {"error": str(exc)}


def build_report(spec: ExperimentSpec, result: dict, H: Hypergraph) -> dict:
    """Assemble the full report; content depends only on spec and seed."""
    return {
        "spec": spec.to_dict(),
        "host": {"n": H.n, "r": H.r, "num_edges": H.num_edges},
        "constants": _constants_dict(spec.params, H.n),
        "environment": {"seed": spec.seed, "version": __version__},
        "result": result,
    }


def render_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


@dataclass(frozen=True)
class RunOutcome:
    """A JSON-ready report plus the trace objects trajectory mode produced."""
    report: dict
    traces: tuple = ()


def run_experiment(spec: ExperimentSpec, workers: int = 1) -> RunOutcome:
    """Dispatch one spec to its mode and wrap the outcome in a report."""
    H = spec.model.build()
    params = spec.params
    traces: tuple = ()
    if spec.mode == "percolation_prob":
        res = percolation_probability_mc(H, params.p, params.q, spec.trials,
                                         spec.seed, workers)
        result = {"mode": spec.mode, **res.to_dict()}
    elif spec.mode == "pc_bisect":
        est = estimate_pc_bisection(H, params.q, spec.seed,
                                    trials=spec.trials, tol=spec.tol,
                                    d=params.d, workers=workers)
        result = {"mode": spec.mode, **est.to_dict()}
    elif spec.mode == "scan":
        rows = threshold_scan(H, spec.grid, params.alpha, params.d,
                              spec.trials, spec.seed, workers, K=params.K)
        result = {"mode": spec.mode, "rows": [row.to_dict() for row in rows]}
    else:
        traces = tuple(
            record_trajectory(H, params, spec.seed, index=k,
                              trace_stride=spec.trace_stride,
                              star_indices=spec.star_indices,
                              star_vertices=spec.star_vertices)
            for k in range(spec.trials))
        result = {
            "mode": spec.mode,
            "traces": [{
                "index": tr.index,
                "percolated": tr.percolated,
                "infected_count": tr.infected_count,
                "final_fraction": tr.infected_count / H.n,
                "stars": [s.to_dict() for s in tr.stars],
            } for tr in traces],
        }
    return RunOutcome(report=build_report(spec, result, H), traces=traces)
