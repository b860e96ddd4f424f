"""Command-line pipeline: abstract, synthesize and simulate a scenario.

Exit codes: 0 success, 1 infeasible or violated, 2 configuration or
certificate error, 3 inconclusive.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, field, replace
from functools import reduce
from pathlib import Path
from typing import Optional

import numpy as np

from .abstraction import (Abstraction, ContinuousCountingSet, build_abstraction, check_epsilon,
                          contract_set, epsilon_terms, expand_set, min_bisim_epsilon)
from .aggregate import DEFAULT_ROW_CAP, suffix_peak
from .control import count_pairs, open_loop_plans, replay_plans, write_plans_csv
from .errors import CertificateError, ConfigError, CountSynthError
from .graph import LabeledDigraph, enumerate_simple_cycles, sample_cycles
from .model import Box, Mode, SwitchedModel
from .presets import preset
from .rounding import prefix_instance, round_suffix
from .sim import (continuous_counts, density_histogram, draw_disturbances, simulate_fleet,
                  write_counts_csv, write_density_csv, write_deviations_csv)
from .solver import export_mps, import_solution, solve
from .synthesis import (JointConstraint, PrefixSuffixSolution, ProblemInstance, aggregate_initial,
                        build_multiclass, extract_solution, infeasibility_verdict, scale_instance,
                        scale_joint)

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_INCONCLUSIVE = 0, 1, 2, 3
SOLVERS = ("internal", "highs", "relaxed", "mps")
VERDICT_EXIT = {"solution": EXIT_OK, "no discrete solution": EXIT_FAIL,
                "no continuous solution": EXIT_FAIL, "inconclusive": EXIT_INCONCLUSIVE}


# ---------------------------------------------------------------- config

def _bound(v, default):
    return default if v is None else float(v)


def _box(spec) -> Box:
    lo = [_bound(v, -math.inf) for v in spec["lo"]]
    hi = [_bound(v, math.inf) for v in spec["hi"]]
    return Box(tuple(lo), tuple(hi))


def parse_model(spec: dict) -> SwitchedModel:
    try:
        modes = [Mode(m["id"], [[(tuple(e), c) for e, c in comp] for comp in m["field"]],
                      float(m["K"]), float(m["M"]), float(m["lambda"]), float(m.get("delta_bar", 0.0)))
                 for m in spec["modes"]]
        return SwitchedModel(modes, _box(spec["domain"]))
    except (KeyError, TypeError) as exc:
        raise ConfigError(f"malformed model section: {exc!r}") from exc


def normalize(config: dict) -> dict:
    """Single-class configs are rewritten as one-element ``classes`` lists."""
    cfg = json.loads(json.dumps(config))
    if "classes" not in cfg:
        cls = {k: cfg.pop(k) for k in ("model", "abstraction", "constraints", "fleet") if k in cfg}
        cls["name"] = cfg.get("name", "class0")
        if "cycles" in cfg.get("synthesis", {}):
            cls["cycles"] = cfg["synthesis"]["cycles"]
        cfg["classes"] = [cls]
    cfg.setdefault("joint", [])
    cfg.setdefault("synthesis", {})
    cfg.setdefault("sim", {})
    cfg.setdefault("seed", 0)
    for cls in cfg["classes"]:
        for key in ("model", "abstraction", "fleet"):
            if key not in cls:
                raise ConfigError(f"class {cls.get('name')!r} lacks a {key!r} section")
        cls.setdefault("constraints", [])
        cls.setdefault("cycles", cfg["synthesis"].get("cycles", {"mode": "enumerate", "max_len": 8}))
    if "T" not in cfg["synthesis"]:
        raise ConfigError("synthesis.T is required")
    return cfg


def load_config(path=None, preset_name: Optional[str] = None) -> dict:
    if (path is None) == (preset_name is None):
        raise ConfigError("give exactly one of a config file or --preset")
    if preset_name is not None:
        try:
            return normalize(preset(preset_name))
        except KeyError as exc:
            raise ConfigError(str(exc)) from exc
    try:
        return normalize(json.loads(Path(path).read_text()))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def _resolve_bound(spec: dict, N: int) -> float:
    kind = spec.get("kind", "max")
    if "R" in spec:
        R = float(spec["R"])
    elif "R_frac" in spec:
        v = float(spec["R_frac"]) * N
        if abs(v - round(v)) < 1e-9:
            R = float(round(v))
        else:
            R = float(math.floor(v) if kind == "max" else math.ceil(v))
    else:
        raise ConfigError(f"constraint {spec.get('name')!r} needs R or R_frac")
    if kind == "max":
        return R
    if kind == "min":
        return N - R
    raise ConfigError(f"constraint kind must be max or min, got {kind!r}")


def continuous_set(spec: dict, model: SwitchedModel, N: int) -> ContinuousCountingSet:
    """Counting set of a constraint spec; ``min`` bounds on mode sets become
    ``max`` bounds on the complementary modes."""
    kind = spec.get("kind", "max")
    modes = None
    if "modes" in spec:
        try:
            modes = {model.mode_index(m) for m in spec["modes"]}
        except KeyError as exc:
            raise ConfigError(f"unknown mode {exc} in constraint {spec.get('name')!r}") from exc
    if kind == "min":
        if "box" in spec or modes is None:
            raise ConfigError("min constraints are supported on mode-only sets")
        modes = set(range(model.n_modes)) - modes
    box = _box(spec["box"]) if "box" in spec else None
    return ContinuousCountingSet(_resolve_bound(spec, N), box, modes,
                                 bool(spec.get("complement", False)), spec.get("name", ""))


# ---------------------------------------------------------------- scenario

@dataclass
class ClassSetup:
    name: str
    model: SwitchedModel
    abstraction: Abstraction
    epsilon: float
    graph: LabeledDigraph
    x0: np.ndarray
    states0: np.ndarray
    sets: list                    # original continuous sets
    constraints: list             # discrete surrogates
    contracted: bool
    cycle_spec: dict
    spec: dict = field(repr=False, default_factory=dict)

    @property
    def N(self) -> int:
        return len(self.states0)


@dataclass
class Scenario:
    config: dict
    classes: list
    joint_sets: list              # (name, [per-class continuous set or None], bound)
    seed: int

    @property
    def N(self) -> int:
        return sum(c.N for c in self.classes)


def _epsilon(model, ab_spec) -> float:
    tau, eta = float(ab_spec["tau"]), float(ab_spec["eta"])
    eps = ab_spec.get("epsilon")
    if eps is None:
        return min_bisim_epsilon(model, tau, eta)
    eps = float(eps)
    try:
        ok = check_epsilon(model, tau, eta, eps)
    except CertificateError:
        raise
    if not ok:
        raise CertificateError(f"epsilon {eps} is not an approximate bisimulation margin "
                               f"(minimum {min_bisim_epsilon(model, tau, eta):.6g})")
    return eps


def _initial_states(spec: dict, model: SwitchedModel, abstraction: Abstraction, seed: int):
    N = int(spec["N"])
    init = spec.get("init", "uniform")
    if init == "explicit":
        x0 = np.asarray(spec["x0"], dtype=float).reshape(N, model.n_x)
    elif init == "uniform":
        repeat = int(spec.get("repeat", 1) or 1)
        if N % repeat:
            raise ConfigError("fleet.repeat must divide fleet.N")
        box = _box(spec["box"]) if "box" in spec else model.domain
        rng = np.random.default_rng(seed)
        base = rng.uniform(box.lo, box.hi, size=(N // repeat, model.n_x))
        x0 = np.repeat(base, repeat, axis=0)
    else:
        raise ConfigError(f"fleet.init must be explicit or uniform, got {init!r}")
    states = abstraction.grid.state_of(x0)
    if np.any(states < 0):
        raise ConfigError("initial states lie outside the abstraction grid")
    return x0, states


def prepare(config: dict, seed: Optional[int] = None) -> Scenario:
    """Abstractions, discrete constraints and initial fleets of every class."""
    cfg = config
    seed = int(cfg["seed"] if seed is None else seed)
    classes = []
    for h, cls in enumerate(cfg["classes"]):
        model = parse_model(cls["model"])
        ab_spec = cls["abstraction"]
        eps = _epsilon(model, ab_spec)
        ab = build_abstraction(model, float(ab_spec["tau"]), float(ab_spec["eta"]))
        g = LabeledDigraph.from_abstraction(ab)
        x0, states0 = _initial_states(cls["fleet"], model, ab, seed + 10 * h)
        sets, cons, contracted = [], [], False
        for spec in cls["constraints"]:
            cs = continuous_set(spec, model, len(states0))
            sets.append(cs)
            if spec.get("discretize", "expand") == "contract":
                cons.append(contract_set(cs, eps, ab.grid, model.n_modes))
                contracted = True
            else:
                cons.append(expand_set(cs, eps, ab.grid, model.n_modes))
        classes.append(ClassSetup(cls.get("name", f"class{h}"), model, ab, eps, g, x0, states0,
                                  sets, cons, contracted, dict(cls["cycles"]), cls))
    N = sum(c.N for c in classes)
    joint = []
    for spec in cfg["joint"]:
        per = []
        bound = None
        for c in classes:
            cs = continuous_set({**spec, "R": 0, "kind": "max"} if spec.get("kind", "max") == "max"
                                else {**spec, "R": 0}, c.model, c.N)
            per.append(cs)
        bound = _resolve_bound(spec, N)
        joint.append((spec.get("name", f"joint{len(joint)}"), per, bound))
    return Scenario(cfg, classes, joint, seed)


def _joint_discrete(scn: Scenario):
    out = []
    for name, per, bound in scn.joint_sets:
        masks = [expand_set(cs, c.epsilon, c.abstraction.grid, c.model.n_modes).mask
                 for cs, c in zip(per, scn.classes)]
        out.append(JointConstraint(masks, bound, name))
    return out


def _cycles(c: ClassSetup, g: LabeledDigraph, seed: int):
    spec = c.cycle_spec
    how = spec.get("mode", "enumerate")
    if how == "enumerate":
        max_len = int(spec.get("max_len", 8))
        return enumerate_simple_cycles(g, max_len), ("simple", max_len)
    if how != "sample":
        raise ConfigError(f"cycles.mode must be enumerate or sample, got {how!r}")
    names = [s.name for s in c.sets]
    visit = []
    for nm in spec.get("visit_complement", []):
        if nm not in names:
            raise ConfigError(f"visit_complement names unknown constraint {nm!r}")
        visit.append(~c.constraints[names.index(nm)].mask)
    res = sample_cycles(g, int(spec.get("count", 50)), visit,
                        mode_fractions=spec.get("mode_fractions"),
                        biased_mode=int(spec.get("biased_mode", 1)),
                        seed=int(spec.get("seed", seed)))
    if spec.get("max_len"):
        res.cycles[:] = [cy for cy in res.cycles if len(cy) <= int(spec["max_len"])]
    return res.cycles, ("sampled", len(res.cycles))


def build_instances(scn: Scenario):
    """Pruned, possibly scaled instances plus joint constraints and the divisor."""
    syn = scn.config["synthesis"]
    T = int(syn["T"])
    insts = []
    for h, c in enumerate(scn.classes):
        w0 = aggregate_initial(c.states0, c.abstraction.n_states)
        probe = ProblemInstance(c.graph, w0, c.constraints, T, [])
        pruned = probe.pruned()
        cycles, coverage = _cycles(c, pruned.graph, scn.seed + 1 + 10 * h)
        insts.append(ProblemInstance(
            pruned.graph, w0, c.constraints, T, cycles,
            exact=True, relax_eps=float(syn.get("relax_eps", 0.0)),
            contracted=c.contracted, cycle_coverage=coverage,
            restrict_reachable=bool(syn.get("restrict_reachable", False)),
            suffix_mode=syn.get("suffix_mode", "auto"),
            row_cap=int(syn.get("lcm_cap", DEFAULT_ROW_CAP)),
            tau=float(c.abstraction.tau), name=c.name))
    joint = _joint_discrete(scn)
    S = syn.get("scale", 1)
    if S == "auto":
        vals = [int(v) for i in insts for v in i.w0 if v]
        vals += [int(b) for i in insts for b in (cc.bound for cc in i.constraints)
                 if float(b).is_integer() and b > 0]
        vals += [int(j.bound) for j in joint if float(j.bound).is_integer() and j.bound > 0]
        S = reduce(math.gcd, vals, 0) or 1
    S = int(S)
    if S > 1:
        insts = [scale_instance(i, S) for i in insts]
        joint = scale_joint(joint, S)
    return insts, joint, S


# ---------------------------------------------------------------- solving

@dataclass
class SynthesisResult:
    verdict: object
    solutions: Optional[list]     # unscaled, one per class
    scale: int
    lp: object
    status: str
    message: str = ""


def _verdict(insts, status):
    verdicts = [infeasibility_verdict(i, status) for i in insts]
    for v in verdicts:
        if v.label in ("no discrete solution", "no continuous solution"):
            return v
    return verdicts[0] if status == "feasible" else next(
        (v for v in verdicts if v.label != "solution"), verdicts[0])


def _tightened(insts, joint, margin: float):
    ins = [replace(i, constraints=[c.with_bound(max(c.bound - margin, 0)) for c in i.constraints])
           for i in insts]
    jn = [JointConstraint(j.masks, max(j.bound - margin, 0), j.name) for j in joint]
    return ins, jn


def _rounded_excess(insts, joint, pinned) -> float:
    """Largest certified suffix count above its bound after rounding."""
    excess = 0.0
    for inst, p in zip(insts, pinned):
        for c in inst.constraints:
            excess = max(excess, float(suffix_peak(p.cycles, p.fixed_alphas, c, inst.row_cap)) - c.bound)
    for j in joint:
        total = 0.0
        for h, mk in enumerate(j.masks):
            if mk is not None:
                total += float(suffix_peak(pinned[h].cycles, pinned[h].fixed_alphas, mk,
                                           insts[h].row_cap))
        excess = max(excess, total - j.bound)
    return excess


def relax_and_round(insts, joint, syn: dict):
    """LP relaxation, pseudo-periodic rounding, then an integer prefix for the
    pinned suffix.

    The relaxation is re-solved with all bounds lowered by a margin until
    the rounded suffix provably meets the original bounds (exactly or
    conservatively, see :func:`suffix_peak`).
    """
    backend = syn.get("backend", "highs")
    margin, rounds = 0.0, int(syn.get("rounding_rounds", 8))
    for _ in range(rounds):
        ins, jn = _tightened(insts, joint, margin)
        relaxed = [replace(i, exact=False, relax_eps=0.0) for i in ins]
        lp = build_multiclass(relaxed, jn)
        res = solve(lp, syn.get("lp_backend", backend), integer=False)
        if not res.feasible:
            return lp, res, relaxed
        pinned = []
        for h, inst in enumerate(relaxed):
            sol = extract_solution(lp, res.x, relaxed, h)
            keep = [j for j, a in enumerate(sol.alphas) if np.sum(a) > 1e-9]
            cyc = [inst.cycles[j] for j in keep]
            alphas = round_suffix(inst.graph, cyc, [sol.alphas[j] for j in keep])
            pinned.append(prefix_instance(insts[h], cyc, alphas))
        excess = _rounded_excess(insts, joint, pinned)
        if excess <= 1e-9:
            lp = build_multiclass(pinned, joint)
            return lp, solve(lp, backend, integer=True), pinned
        margin += max(1.0, math.ceil(excess))
    from .solver import SolveResult
    return lp, SolveResult("iteration-limit", None, {}, "rounding margin did not converge"), pinned


def solve_instances(insts, joint, solver: str, syn: dict, out_dir: Optional[Path] = None,
                    solution_in=None):
    if solver == "relaxed":
        return relax_and_round(insts, joint, syn)
    backend = "internal" if solver == "internal" else syn.get("backend", "highs")
    lp = build_multiclass(insts, joint)
    if solver == "mps":
        if out_dir is not None:
            export_mps(lp, out_dir / "model.mps")
        if solution_in is None:
            return lp, None, insts
        return lp, import_solution(lp, solution_in), insts
    return lp, solve(lp, backend), insts


def synthesize(scn: Scenario, solver: Optional[str] = None, out_dir: Optional[Path] = None,
               solution_in=None) -> SynthesisResult:
    syn = scn.config["synthesis"]
    solver = solver or syn.get("solver", "internal")
    if solver not in SOLVERS:
        raise ConfigError(f"solver must be one of {SOLVERS}")
    insts, joint, S = build_instances(scn)
    lp, res, used = solve_instances(insts, joint, solver, syn, out_dir, solution_in)
    if res is None:
        from .synthesis import Verdict
        return SynthesisResult(Verdict("inconclusive", "program exported for an external solver"),
                               None, S, lp, "exported")
    verdict = _verdict(insts, res.status)
    sols = None
    if res.feasible:
        sols = []
        for h in range(len(used)):
            sol = extract_solution(lp, res.x, used, h)
            if solver == "relaxed":
                sol = replace(sol, provenance="rounded")
            sols.append(sol.scaled(S) if S > 1 else sol)
    return SynthesisResult(verdict, sols, S, lp, res.status, res.message)


def solutions_json(result: SynthesisResult) -> str:
    return json.dumps({
        "format": "countsynth.solutions", "version": 1,
        "verdict": result.verdict.label, "reason": result.verdict.reason, "scale": result.scale,
        "classes": [json.loads(s.to_json()) for s in (result.solutions or [])],
    }, indent=1)


def read_solutions(text: str) -> list[PrefixSuffixSolution]:
    d = json.loads(text)
    if d.get("format") != "countsynth.solutions":
        raise ConfigError("not a countsynth solutions document")
    return [PrefixSuffixSolution.from_json(json.dumps(c)) for c in d["classes"]]


# ---------------------------------------------------------------- simulation

@dataclass
class SimulationResult:
    plans: list
    discrete_counts: np.ndarray
    continuous_counts: np.ndarray
    bounds: np.ndarray
    names: list
    deviation: np.ndarray
    density: np.ndarray
    bins: np.ndarray
    epsilon: float
    left_graph: bool

    @property
    def discrete_ok(self) -> bool:
        return not self.left_graph and bool(np.all(self.discrete_counts <= self.bounds + 1e-9))

    @property
    def continuous_ok(self) -> bool:
        return bool(np.all(self.continuous_counts <= self.bounds + 1e-9))

    @property
    def ok(self) -> bool:
        return self.discrete_ok and self.continuous_ok


def simulate(scn: Scenario, solutions, horizon: Optional[int] = None) -> SimulationResult:
    """Extract plans, replay them on the abstraction and on the continuous fleet."""
    H = int(horizon if horizon is not None else scn.config["sim"].get("horizon", 50))
    names, bounds, dcounts, ccounts, plans_all, traces, replays = [], [], [], [], [], [], []
    left = False
    for h, (c, sol) in enumerate(zip(scn.classes, solutions)):
        w0 = aggregate_initial(c.states0, c.abstraction.n_states)
        if not np.array_equal(np.asarray(sol.w0), w0):
            raise ConfigError(f"solution for class {c.name!r} starts from another fleet")
        plans = open_loop_plans(sol, c.states0, c.graph)
        plans_all.append(plans)
        states, modes = replay_plans(plans, c.states0, c.graph, H)
        replays.append((states, modes))
        left |= bool(np.any(states < 0))
        dcounts.append(count_pairs(states[:-1], modes, c.constraints))
        dist = draw_disturbances(c.model, c.N, scn.seed + 2 + 10 * h)
        tr = simulate_fleet(c.model, plans, c.x0, dist, H, c.abstraction.tau, c.abstraction,
                            margin=c.epsilon)
        traces.append(tr)
        ccounts.append(continuous_counts(tr, c.sets))
        names += [s.name or f"{c.name}_{l}" for l, s in enumerate(c.sets)]
        bounds += [s.bound for s in c.sets]
    for name, per, bound in scn.joint_sets:
        dj = np.zeros(H, dtype=np.int64)
        cj = np.zeros(H, dtype=np.int64)
        for h, (c, cs) in enumerate(zip(scn.classes, per)):
            mask = expand_set(cs, c.epsilon, c.abstraction.grid, c.model.n_modes)
            states, modes = replays[h]
            dj += count_pairs(states[:-1], modes, [mask])[:, 0]
            cj += continuous_counts(traces[h], [cs])[:, 0]
        dcounts.append(dj[:, None])
        ccounts.append(cj[:, None])
        names.append(name)
        bounds.append(bound)
    bins_spec = scn.config["sim"].get("bins")
    dom = scn.classes[0].model.domain
    if bins_spec is None:
        bins_spec = {"axis": 0, "lo": dom.lo[0], "hi": dom.hi[0], "n": 20}
    bins = np.linspace(float(bins_spec["lo"]), float(bins_spec["hi"]), int(bins_spec["n"]) + 1)
    axis = int(bins_spec.get("axis", 0))
    density = sum(density_histogram(tr, bins, axis) for tr in traces)
    deviation = np.max(np.stack([tr.deviation for tr in traces]), axis=0)
    eps = max(c.epsilon for c in scn.classes)
    return SimulationResult([p for ps in plans_all for p in ps], np.hstack(dcounts),
                            np.hstack(ccounts), np.array(bounds, dtype=float), names, deviation,
                            density, bins, eps, left)


def write_outputs(sim: SimulationResult, scn: Scenario, out_dir: Path) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    plans, offset = [], 0
    for c in scn.classes:
        plans += [replace(p, subsystem=p.subsystem + offset) for p in sim.plans[offset:offset + c.N]]
        offset += c.N
    write_plans_csv(plans, out_dir / "plan.csv")
    write_counts_csv(out_dir / "counts.csv", sim.continuous_counts, sim.bounds, sim.names)
    write_density_csv(out_dir / "density.csv", sim.density, sim.bins)
    write_deviations_csv(out_dir / "deviations.csv", sim.deviation)


# ---------------------------------------------------------------- commands

def cmd_abstract(args) -> int:
    cfg = load_config(args.config, args.preset)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    multi = len(cfg["classes"]) > 1
    for h, cls in enumerate(cfg["classes"]):
        model = parse_model(cls["model"])
        tau, eta = float(cls["abstraction"]["tau"]), float(cls["abstraction"]["eta"])
        ab = build_abstraction(model, tau, eta)
        name = cls.get("name", f"class{h}")
        print(f"{name}: {ab.n_states} states, tau={tau}, eta={eta}")
        for row in epsilon_terms(model, tau, eta):
            print(f"  mode {row['mode']}: contraction={row['contraction']:.6g} "
                  f"drift={row['disturbance_drift']:.6g} offset={row['offset']:.6g} "
                  f"epsilon={row['epsilon']:.6g}")
        eps = min_bisim_epsilon(model, tau, eta)
        print(f"  epsilon*={eps:.6g}")
        fname = f"abstraction_{name}.json" if multi else "abstraction.json"
        (out / fname).write_text(ab.to_json())
    return EXIT_OK


def cmd_synthesize(args) -> int:
    cfg = load_config(args.config, args.preset)
    if args.horizon is not None:
        cfg["synthesis"]["T"] = int(args.horizon)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scn = prepare(cfg, args.seed)
    res = synthesize(scn, args.solver, out, getattr(args, "solution_in", None))
    print(f"verdict: {res.verdict}")
    if res.status == "exported":
        print(f"wrote {out / 'model.mps'}")
        return EXIT_OK
    (out / "solution.json").write_text(solutions_json(res))
    return VERDICT_EXIT[res.verdict.label]


def cmd_simulate(args) -> int:
    cfg = load_config(args.config, args.preset)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    scn = prepare(cfg, args.seed)
    path = Path(args.solution) if args.solution else out / "solution.json"
    if path.exists():
        sols = read_solutions(path.read_text())
    else:
        res = synthesize(scn, args.solver, out)
        (out / "solution.json").write_text(solutions_json(res))
        print(f"verdict: {res.verdict}")
        if res.solutions is None:
            return VERDICT_EXIT[res.verdict.label] if res.status != "exported" else EXIT_INCONCLUSIVE
        sols = res.solutions
    if not sols:
        print("solution file holds no solution")
        return EXIT_FAIL
    sim = simulate(scn, sols, args.horizon)
    write_outputs(sim, scn, out)
    for l, nm in enumerate(sim.names):
        print(f"{nm}: bound {sim.bounds[l]:g}, discrete max {sim.discrete_counts[:, l].max()}, "
              f"continuous max {sim.continuous_counts[:, l].max()}")
    print(f"max deviation {sim.deviation.max():.6g} (epsilon {sim.epsilon:g})")
    print("simulation " + ("satisfies every counting constraint" if sim.ok else "VIOLATES a counting constraint"))
    return EXIT_OK if sim.ok else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="countsynth", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, fn, helptext in (("abstract", cmd_abstract, "build and save the abstraction"),
                               ("synthesize", cmd_synthesize, "solve the counting problem"),
                               ("simulate", cmd_simulate, "extract plans and simulate the fleet")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", nargs="?", help="scenario JSON file")
        sp.add_argument("--preset", help="built-in scenario (numerical, tcl, tcl-min)")
        sp.add_argument("--solver", choices=SOLVERS, help="override synthesis.solver")
        sp.add_argument("--seed", type=int, help="override the scenario seed")
        sp.add_argument("--horizon", type=int,
                        help="prefix horizon T (synthesize) or simulation length (simulate)")
        sp.add_argument("--out-dir", default=".", help="directory for output files")
        if name == "synthesize":
            sp.add_argument("--solution-in", help="externally solved point for --solver mps")
        if name == "simulate":
            sp.add_argument("--solution", help="solution JSON (default: OUT_DIR/solution.json)")
        sp.set_defaults(func=fn)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, CertificateError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CountSynthError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
