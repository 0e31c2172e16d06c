"""End-to-end solve: preprocess, build fragments and network, solve, re-validate."""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Optional

from . import formulations as fm
from .fragments import SET_KINDS, FragmentSet, generate
from .instance import Instance
from .milp import OPTIMAL, SolveResult, solve
from .network import FragmentNetwork, build_network
from .preprocessing import eliminate_arcs, tighten_time_windows

FORMULATIONS = ("abf", "fff", "psff", "pbf")


@dataclass
class SolveConfig:
    formulation: str = "psff"
    fragments: str = "rf"
    time_limit: Optional[float] = 1800.0
    backend: str = "scip"
    mode: str = "auto"
    replicate_cuts: bool = True
    dominance: bool = True
    fixed_use: bool = True
    path_cap: int = fm.DEFAULT_PATH_CAP
    dedupe_paths: bool = True
    seed: int = 0

    def validate(self) -> None:
        if self.formulation not in FORMULATIONS:
            raise ValueError(f"unknown formulation {self.formulation!r}")
        if self.formulation in ("fff", "psff") and self.fragments not in SET_KINDS:
            raise ValueError(f"unknown fragment set {self.fragments!r}")


@dataclass
class Outcome:
    result: SolveResult
    routes: list = field(default_factory=list)
    fragment_count: int = 0
    network_time: float = 0.0
    total_time: float = 0.0
    recosted: Optional[float] = None
    problems: list = field(default_factory=list)
    model: object = None
    networks: list = field(default_factory=list)
    instance: Optional[Instance] = None

    @property
    def status(self) -> str:
        return self.result.status

    @property
    def objective(self) -> Optional[float]:
        return self.result.objective


def fragment_networks(inst: Instance, kind: str, dominance: bool = True) -> tuple[list[FragmentSet], list[FragmentNetwork]]:
    """Fragment set and network per vehicle view (a single one for one-depot fleets)."""
    sets, nets = [], []
    for view in fm.views(inst):
        arcs = eliminate_arcs(view)
        fset = generate(kind, view, arcs, dominance=dominance)
        sets.append(fset)
        nets.append(build_network(fset, view, arcs))
    return sets, nets


def build_model(inst: Instance, cfg: SolveConfig):
    """Returns (model, fragment count, networks)."""
    if cfg.formulation == "abf":
        return fm.build_abf(inst), 0, []
    if cfg.formulation == "pbf":
        paths = fm.enumerate_paths(inst, cfg.path_cap)
        return fm.build_pbf(paths, inst, dedupe=cfg.dedupe_paths), len(paths), []
    sets, nets = fragment_networks(inst, cfg.fragments, cfg.dominance)
    count = sum(len(n.fragments) for n in nets)
    if cfg.formulation == "fff":
        return fm.build_fff(nets, inst, fixed_use=cfg.fixed_use), count, nets
    return fm.build_psff(nets, inst), count, nets


def run(inst: Instance, cfg: SolveConfig, preprocess: bool = True) -> Outcome:
    """Solve ``inst`` (already configured with L and fleet) under ``cfg``."""
    cfg.validate()
    t0 = time.perf_counter()
    work = tighten_time_windows(inst) if preprocess else inst
    model, count, nets = build_model(work, cfg)
    t_net = time.perf_counter() - t0
    limit = None if cfg.time_limit is None else max(cfg.time_limit - t_net, 0.01)
    cut_source = None
    if cfg.formulation in ("fff", "psff"):
        def cut_source(values):
            return fm.separate_cuts(values, model, replicate=cfg.replicate_cuts)
    res = solve(model, limit, cut_source, backend=cfg.backend, mode=cfg.mode, seed=cfg.seed)
    out = Outcome(res, fragment_count=count, network_time=t_net, model=model, networks=nets, instance=work)
    if res.has_solution:
        out.routes = fm.decode_routes(model, res.values)
        check = fm.check_solution(out.routes, work)
        out.recosted = check.cost
        out.problems = list(check.problems)
        if abs(check.cost - res.objective) > 1e-4:
            out.problems.append(f"objective {res.objective:.6f} differs from re-costed routes {check.cost:.6f}")
    out.total_time = time.perf_counter() - t0
    return out
