"""Experiment driver: config ingestion, end-to-end orchestration, reports, CLI."""
import argparse
import csv
import io
import json
import sys
import time
from dataclasses import asdict, dataclass, field
from math import log

import numpy as np

from . import jsonio
from .beta_learner import GdConfig, fit_beta, loss, theorem_schedule
from .concepts import (DistributionSpec, audit_assumptions, build_packing_net, make_instance,
                       sample_w_star)
from .discretizer import (DiscretizationParams, pseudoperiod_fraction, theorem_m1,
                          theorem_params)
from .errors import (AmplificationExhausted, ArtifactError, FeasibilityError, NonConvergence)
from .hardness_bench import (average_correlation, default_gaussian,
                             gradient_concentration_experiment, write_concentration_csv,
                             write_correlations_csv)
from .period_finder import find_period_coordinate, reconstruct_w
from .qsq_oracle import BRUTE_MAX_POINTS, DENSE_Q_MAX, NoiseModel, Oracle

# static cost model limits
M1_MAX = 2**53                  # M1 and the accepted a stay exact in float64
EPS1_ULP_FACTOR = 2.0**-44      # eps1 must exceed this times R_w to be resolvable in float64

LOSS_TRACE_COLUMNS = ("iteration", "loss", "beta_err_l2")
ATTEMPT_COLUMNS = ("coordinate", "round", "y1", "y2", "candidate", "accepted")


@dataclass
class ExperimentConfig:
    d: int = 1
    R_w: float = 1.0
    cap_D: int = 1
    w_star: list = None             # drawn from the constrained sphere when absent
    beta_star: list = None          # positive, sorted descending, unit l1 norm when absent
    distribution: dict = field(default_factory=lambda: {"kind": "uniform"})
    mode: str = "theorem"           # "theorem" | "free"
    M1: int = None
    M2: int = None
    R_tilde: int = None
    tau: float = None
    R: float = None                 # stage 2 truncation (free mode)
    noise: str = "random"
    eps: float = 0.1
    delta: float = 0.1
    eta: float = 0.5
    trials: int = 1
    seed: int = 0
    backend: str = "analytic"
    amplification_constant: float = 2.0
    max_attempts: int = None
    unsafe_params: bool = False
    out: str = None

    @staticmethod
    def from_dict(obj):
        known = ExperimentConfig.__dataclass_fields__
        bad = set(obj) - set(known)
        if bad:
            raise ValueError(f"unknown config fields: {sorted(bad)}")
        return ExperimentConfig(**obj)

    def to_dict(self):
        return asdict(self)


@dataclass
class LearnReport:
    w_star: list
    beta_star: list
    w_hat: list
    beta_hat: list
    final_loss: float
    qsq_count: int
    gd_iterations: int
    period_traces: list
    params: dict
    success: bool
    w_error_inf: float
    n_bound: float
    loss_trace: list = field(default_factory=list)
    query_log: list = field(default_factory=list)
    wall_time: float = 0.0
    seed: int = 0

    def to_dict(self):
        d = asdict(self)
        d.pop("query_log")
        d.pop("loss_trace")
        d.pop("wall_time")
        return d


# ---------------------------------------------------------------- parameters and feasibility

def _dist(cfg):
    spec = dict(cfg.distribution)
    spec.setdefault("truncation_R", None)
    return DistributionSpec.from_dict(spec)


def resolve_parameters(cfg):
    """(fourier params, verification params, tau, stage-2 R, eps1) for a config."""
    nonuni = _dist(cfg).kind != "uniform"
    if cfg.mode == "theorem":
        s = theorem_schedule(cfg.d, cfg.cap_D, cfg.R_w, cfg.eps, cfg.eta)
        M1 = theorem_m1(cfg.d, cfg.cap_D, cfg.R_w, s["eps1"], nonuni)
        if M1 > M1_MAX:
            raise FeasibilityError("M1 exceeds the float64 integer range", "M1", M1, M1_MAX)
        four, ver, tau = theorem_params(cfg.d, cfg.cap_D, cfg.R_w, s["eps1"], nonuni, M1=M1)
        return four, ver, tau, s["R"], s["eps1"]
    if cfg.mode != "free":
        raise ValueError(f"unknown mode {cfg.mode}")
    if not cfg.unsafe_params:
        raise FeasibilityError("free parameters need the unsafe-params acknowledgment", "unsafe_params",
                               False, True)
    four = DiscretizationParams(cfg.M1, cfg.M2, cfg.R_tilde, 1, "fourier", False)
    ver = DiscretizationParams(cfg.M1, cfg.M2, cfg.R_tilde, 1, "verification", False)
    eps1 = cfg.R_w**2 / cfg.M1
    return four, ver, cfg.tau, cfg.R, eps1


def check_feasibility(cfg, four, eps1):
    """Static cost model; raises FeasibilityError naming the first violated quantity."""
    if eps1 < EPS1_ULP_FACTOR * cfg.R_w:
        raise FeasibilityError("eps1 below float64 resolution of w", "eps1", eps1, EPS1_ULP_FACTOR * cfg.R_w)
    q = 2 * four.radius
    if _dist(cfg).kind != "uniform" and q > DENSE_Q_MAX:
        raise FeasibilityError("non-uniform Fourier sampling needs the dense sampler", "q", q, DENSE_Q_MAX)
    if cfg.backend == "brute":
        pts = (2 * four.R_tilde * four.M1 * cfg.cap_D) ** cfg.d
        if pts > BRUTE_MAX_POINTS:
            raise FeasibilityError("brute-force domain too large", "domain_points", pts, BRUTE_MAX_POINTS)


def smallest_feasible_R_w(cfg, ladder):
    """First R_w of an ascending ladder passing the feasibility model."""
    for rw in sorted(ladder):
        c = ExperimentConfig.from_dict({**cfg.to_dict(), "R_w": rw, "w_star": None})
        try:
            four, _, _, _, eps1 = resolve_parameters(c)
            check_feasibility(c, four, eps1)
            return rw
        except FeasibilityError:
            continue
    raise FeasibilityError("no feasible R_w on the ladder", "R_w", None, None)


def n_bound(d, D, delta, M1, R_w):
    return d * D * log(1 / delta) * log(M1 * d**2 / R_w) ** 5


# ---------------------------------------------------------------- end to end

def make_config_instance(cfg, seed):
    rng = np.random.default_rng([seed, 7])
    w = cfg.w_star if cfg.w_star is not None else sample_w_star(cfg.d, cfg.R_w, [seed, 11])
    if cfg.beta_star is not None:
        b = cfg.beta_star
    else:
        b = np.sort(rng.dirichlet(np.ones(cfg.cap_D)))[::-1]
    return make_instance(cfg.d, cfg.R_w, cfg.cap_D, w, b)


def run_end_to_end(cfg, seed=None):
    seed = cfg.seed if seed is None else seed
    t0 = time.perf_counter()
    four, ver, tau, R2, eps1 = resolve_parameters(cfg)
    check_feasibility(cfg, four, eps1)
    inst = make_config_instance(cfg, seed)
    dist = _dist(cfg)
    oracle = Oracle(inst, None if dist.kind == "uniform" else dist, NoiseModel(tau, cfg.noise, seed),
                    backend=cfg.backend)
    results = []
    for j in range(cfg.d):
        try:
            results.append(find_period_coordinate(inst, four, ver, j, oracle, cfg.delta,
                                                  cfg.amplification_constant, cfg.max_attempts,
                                                  nonuniform=dist.kind != "uniform", seed=seed))
        except AmplificationExhausted as e:
            e.args = (f"stage 1: {e.args[0]}",)
            raise
    w_hat = reconstruct_w(results, four.M1, cfg.d)
    stage2 = dist.with_radius(R2) if dist.kind != "uniform" else DistributionSpec("uniform", R2)
    try:
        fit = fit_beta(inst, w_hat, stage2, GdConfig(eta=cfg.eta, eps=cfg.eps, eps1=eps1))
    except NonConvergence as e:
        e.args = (f"stage 2: {e.args[0]}",)
        raise
    final = loss(inst, w_hat, fit.beta_hat, stage2)
    werr = float(np.max(np.abs(w_hat - inst.w_star)))
    traces = []
    for r in results:
        traces.append({**r.to_dict(), "rounds": r.trace})
    assert oracle.count == sum(r.qsq_count for r in results)
    return LearnReport(
        w_star=list(map(float, inst.w_star)), beta_star=list(map(float, inst.beta_star)),
        w_hat=list(map(float, w_hat)), beta_hat=list(map(float, fit.beta_hat)), final_loss=float(final),
        qsq_count=oracle.count, gd_iterations=fit.iterations, period_traces=traces,
        params={"fourier": four.to_dict(), "verification": ver.to_dict(), "tau": tau, "R": R2,
                "eps": cfg.eps, "eps1": eps1, "delta": cfg.delta},
        success=bool(final <= cfg.eps and werr <= eps1), w_error_inf=werr,
        n_bound=n_bound(cfg.d, cfg.cap_D, cfg.delta, four.M1, cfg.R_w),
        loss_trace=[list(x) for x in fit.loss_trace], query_log=oracle.trace,
        wall_time=time.perf_counter() - t0, seed=seed)


# ---------------------------------------------------------------- reports

def _csv_text(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(v)) if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _config_record(config):
    if config is None:
        return None
    rec = config.to_dict()
    rec.pop("out")      # the output location is not part of the experiment
    return rec


def emit_report(reports, out_dir, config=None):
    """report.json (master) + loss_trace.csv + period_attempts.csv + queries.jsonl + timing.json.

    Wall time goes to timing.json only, so the other files are byte-identical across reruns.
    """
    import os
    reports = list(reports)
    master = {"schema_version": jsonio.SCHEMA_VERSION,
              "config": _config_record(config),
              "trials": [r.to_dict() for r in reports],
              "success_rate": (sum(r.success for r in reports) / len(reports)) if reports else None}
    jsonio.write_json(os.path.join(out_dir, "report.json"), master)
    rows = [(i, *row) for i, r in enumerate(reports) for row in r.loss_trace]
    jsonio.atomic_write(os.path.join(out_dir, "loss_trace.csv"), _csv_text(("trial",) + LOSS_TRACE_COLUMNS, rows))
    rows = []
    for i, r in enumerate(reports):
        for tr in r.period_traces:
            for rd in tr["rounds"]:
                for cand, ok in rd["tested"] or [(None, False)]:
                    rows.append((i, tr["coordinate"], rd["round"], rd["y1"], rd["y2"],
                                 "" if cand is None else cand, int(ok)))
    jsonio.atomic_write(os.path.join(out_dir, "period_attempts.csv"),
                        _csv_text(("trial",) + ATTEMPT_COLUMNS, rows))
    lines = [jsonio.dumps({"trial": i, **q}, indent=0) for i, r in enumerate(reports) for q in r.query_log]
    jsonio.atomic_write(os.path.join(out_dir, "queries.jsonl"), "".join(s + "\n" for s in lines))
    jsonio.write_json(os.path.join(out_dir, "timing.json"), {"wall_time": [r.wall_time for r in reports]})
    return os.path.join(out_dir, "report.json")


def load_report(out_dir):
    import os
    master = jsonio.read_json(os.path.join(out_dir, "report.json"))
    reports = [LearnReport(**t) for t in master["trials"]]
    with open(os.path.join(out_dir, "loss_trace.csv")) as fh:
        rows = list(csv.DictReader(fh))
    for r in rows:
        reports[int(r["trial"])].loss_trace.append([int(r["iteration"]), float(r["loss"]),
                                                    float(r["beta_err_l2"])])
    with open(os.path.join(out_dir, "queries.jsonl")) as fh:
        for line in fh:
            q = json.loads(line)
            reports[q.pop("trial")].query_log.append(q)
    timing = jsonio.read_json(os.path.join(out_dir, "timing.json"))["wall_time"]
    for r, t in zip(reports, timing):
        r.wall_time = t
    return master, reports


# ---------------------------------------------------------------- CLI

EXIT_OK, EXIT_FEASIBILITY, EXIT_PROBABILISTIC = 0, 2, 3


def _load_cfg(args):
    obj = jsonio.read_json(args.config) if args.config else {}
    for key in ("seed", "out", "backend", "noise", "amplification_constant", "max_attempts"):
        v = getattr(args, key, None)
        if v is not None:
            obj[key] = v
    if args.unsafe_params:
        obj["unsafe_params"] = True
    return ExperimentConfig.from_dict(obj)


def _emit(obj, out, name):
    import os
    text = jsonio.dumps(obj) + "\n"
    if out:
        jsonio.atomic_write(os.path.join(out, name), text)
    sys.stdout.write(text)


def cmd_gen(cfg, args):
    inst = make_config_instance(cfg, cfg.seed)
    _emit(inst.to_dict(), cfg.out, "instance.json")


def cmd_audit(cfg, args):
    dist = _dist(cfg)
    four, ver, tau, _, _ = resolve_parameters(cfg)
    R = dist.truncation_R if dist.truncation_R is not None else ver.R_tilde * ver.M1 * cfg.cap_D
    a = audit_assumptions(dist.with_radius(R), four.M1, cfg.cap_D, cfg.R_w, d=cfg.d)
    _emit({**a.to_dict(), "ok": a.ok}, cfg.out, "audit.json")


def cmd_discretize(cfg, args):
    four, ver, tau, _, _ = resolve_parameters(cfg)
    inst = make_config_instance(cfg, cfg.seed)
    eta = [pseudoperiod_fraction(inst, ver, j) for j in range(cfg.d)]
    _emit({"fourier": four.to_dict(), "verification": ver.to_dict(), "tau": tau,
           "pseudoperiod_fraction": eta}, cfg.out, "discretize.json")


def cmd_period_find(cfg, args):
    four, ver, tau, _, eps1 = resolve_parameters(cfg)
    check_feasibility(cfg, four, eps1)
    inst = make_config_instance(cfg, cfg.seed)
    dist = _dist(cfg)
    oracle = Oracle(inst, None if dist.kind == "uniform" else dist, NoiseModel(tau, cfg.noise, cfg.seed),
                    backend=cfg.backend)
    res = [find_period_coordinate(inst, four, ver, j, oracle, cfg.delta, cfg.amplification_constant,
                                  cfg.max_attempts, nonuniform=dist.kind != "uniform", seed=cfg.seed)
           for j in range(cfg.d)]
    w_hat = reconstruct_w(res, four.M1, cfg.d)
    _emit({"w_star": inst.w_star, "w_hat": w_hat, "coordinates": [r.to_dict() for r in res],
           "qsq_count": oracle.count}, cfg.out, "period.json")


def cmd_learn(cfg, args):
    _, _, _, R2, eps1 = resolve_parameters(cfg)
    inst = make_config_instance(cfg, cfg.seed)
    w_hat = np.asarray(args.w_hat if args.w_hat else inst.w_star, float)
    dist = _dist(cfg)
    stage2 = dist.with_radius(R2) if dist.kind != "uniform" else DistributionSpec("uniform", R2)
    fit = fit_beta(inst, w_hat, stage2, GdConfig(eta=cfg.eta, eps=cfg.eps))
    _emit({"beta_star": inst.beta_star, "beta_hat": fit.beta_hat, "iterations": fit.iterations,
           "loss_trace": fit.loss_trace}, cfg.out, "learn.json")


def cmd_end2end(cfg, args):
    reps = [run_end_to_end(cfg, cfg.seed + i) for i in range(cfg.trials)]
    if cfg.out:
        emit_report(reps, cfg.out, cfg)
    rate = sum(r.success for r in reps) / len(reps) if reps else None
    sys.stdout.write(jsonio.dumps({"success_rate": rate, "qsq_count": [r.qsq_count for r in reps]}) + "\n")


def cmd_hardness(cfg, args):
    import os
    sigma = args.sigma
    out = cfg.out or "."
    rows = []
    for d in range(args.d_min, args.d_max + 1):
        net = build_packing_net(d, cfg.R_w, seed=cfg.seed)
        rep = average_correlation(net, sigma, cfg.R_w)
        write_correlations_csv(os.path.join(out, f"correlations_d{d}.csv"), rep)
        rows.append({"d": d, **rep.to_dict()})
    conc = gradient_concentration_experiment(range(args.d_min, args.d_max + 1), cfg.R_w, cfg.cap_D,
                                             default_gaussian(sigma), np.ones(cfg.cap_D),
                                             trials=args.nets, seed=cfg.seed)
    write_concentration_csv(os.path.join(out, "concentration.csv"), conc)
    sys.stdout.write(jsonio.dumps({"correlations": rows, "concentration": conc}) + "\n")


COMMANDS = {"gen": cmd_gen, "audit": cmd_audit, "discretize": cmd_discretize,
            "period-find": cmd_period_find, "learn": cmd_learn, "end2end": cmd_end2end,
            "hardness": cmd_hardness}


def build_parser():
    p = argparse.ArgumentParser(prog="artifact", description="QSQ periodic-neuron learning simulator")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", help="JSON experiment config")
        s.add_argument("--seed", type=int)
        s.add_argument("--out", help="output directory")
        s.add_argument("--unsafe-params", action="store_true", help="allow free (non-theorem) parameters")
        s.add_argument("--backend", choices=["brute", "analytic"])
        s.add_argument("--noise", choices=["zero", "random", "adversarial"])
        s.add_argument("--amplification-constant", type=float)
        s.add_argument("--max-attempts", type=int)
        if name == "learn":
            s.add_argument("--w-hat", type=float, nargs="+", help="direction estimate (default: truth)")
        if name == "hardness":
            s.add_argument("--sigma", type=float, default=0.6)
            s.add_argument("--d-min", type=int, default=2)
            s.add_argument("--d-max", type=int, default=6)
            s.add_argument("--nets", type=int, default=20)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_cfg(args)
        COMMANDS[args.command](cfg, args)
    except FeasibilityError as e:
        sys.stderr.write(f"feasibility error: {e} ({e.quantity}={e.value}, limit {e.limit})\n")
        return EXIT_FEASIBILITY
    except (AmplificationExhausted, NonConvergence) as e:
        sys.stderr.write(f"probabilistic failure: {e}\n")
        return EXIT_PROBABILISTIC
    except ArtifactError as e:
        sys.stderr.write(f"error: {type(e).__name__}: {e}\n")
        return 1
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
