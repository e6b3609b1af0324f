"""Metropolis simulated annealing over triangulations.

One annealing chain owns one mutable triangulation. Proposals come from an
ensemble of perturbation strategies, each with its own aggressiveness that is
tuned toward a 23% acceptance rate. Temperature and the fuzzy contraction
length decay geometrically together across levels, and every strategy
receives an equal share of compute (tracked with a deterministic work-unit
proxy so runs stay reproducible from the seed).
"""
from __future__ import annotations

import logging
import math
import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Optional

from .geometry import Point, UniformGrid
from .objective import (EdgeFlip, ObjectiveParams, VertexMoves, flip_region,
                        is_contractible, local_objective, move_region, objective)
from .trimesh import (DOF_FREE, DOF_ON_SEGMENT, FlipResult, INTERNAL,
                      Orientation, Triangulation)
from .geometry import orient2d
from .scene import Scene
from .trimesh import optimal_refined_cdt

logger = logging.getLogger("mintri.anneal")

ALL_STRATEGIES = (
    "direct", "direct_group", "cluster", "cluster_group",
    "resample_small", "resample_large", "swap_contracted",
    "contract_neighbor", "flip_edges",
)
# Strategies that exist to shuffle contracted clusters; polish runs drop them.
CONTRACTION_STRATEGIES = frozenset({"cluster", "cluster_group",
                                    "swap_contracted", "contract_neighbor"})

IDEAL_ACCEPT = 0.23
ADAPT_WINDOW = 100
ADAPT_GAMMA = 0.5
GROUP_FRACTION = 0.02
RESAMPLE_AREA_FACTOR = 10.0  # small/large split at 10 * eps^2 of star area


@dataclass
class Schedule:
    t_init: float = 0.02
    t_final: float = 1e-4
    eps_init: float = 0.05
    eps_final: float = 1e-4
    levels: int = 200
    steps_per_level: int = 200

    def __post_init__(self) -> None:
        if not (self.t_init >= self.t_final > 0.0):
            raise ValueError("need t_init >= t_final > 0")
        if not (self.eps_init >= self.eps_final > 0.0):
            raise ValueError("need eps_init >= eps_final > 0")
        if self.levels < 1 or self.steps_per_level < 1:
            raise ValueError("levels and steps_per_level must be >= 1")

    def at(self, level: int) -> tuple[float, float]:
        """(T, eps) for a level, decaying geometrically from init to final."""
        if self.levels == 1:
            return self.t_init, self.eps_init
        s = level / (self.levels - 1)
        t = self.t_init * (self.t_final / self.t_init) ** s
        e = self.eps_init * (self.eps_final / self.eps_init) ** s
        return t, e


@dataclass
class StrategyState:
    name: str
    lam: float
    lam_min: float
    lam_max: float
    accepts: int = 0
    attempts: int = 0
    total_accepts: int = 0
    total_attempts: int = 0
    cost_units: float = 0.0
    wall_time: float = 0.0

    @property
    def acceptance(self) -> float:
        return self.total_accepts / self.total_attempts if self.total_attempts else 0.0


def adapt_lambda(state: StrategyState, target: float = IDEAL_ACCEPT,
                 gamma: float = ADAPT_GAMMA) -> float:
    """Multiplicative aggressiveness controller; resets the window counters."""
    if state.attempts <= 0:
        return state.lam
    rate = state.accepts / state.attempts
    factor = (rate / target) ** gamma if rate > 0.0 else 0.0
    lam = state.lam * factor if factor > 0.0 else state.lam_min
    state.lam = min(max(lam, state.lam_min), state.lam_max)
    state.accepts = 0
    state.attempts = 0
    return state.lam


@dataclass
class Proposal:
    moves: list[tuple[int, float, float]] = field(default_factory=list)
    flips: list[tuple[int, int]] = field(default_factory=list)

    @property
    def empty(self) -> bool:
        return not self.moves and not self.flips


def metropolis_accept(df: float, temperature: float, rng: random.Random) -> bool:
    """Accept with probability min(1, exp(-df/T))."""
    if df <= 0.0:
        return True
    x = df / temperature
    if x > 700.0:
        return False
    return rng.random() < math.exp(-x)


@dataclass
class AnnealResult:
    final: Triangulation
    best: Triangulation
    best_f: float
    final_f: float
    proposals: int = 0
    accepted: int = 0
    log: list[str] = field(default_factory=list)
    strategies: dict[str, StrategyState] = field(default_factory=dict)


class Annealer:
    """One annealing chain over one mutable triangulation."""

    def __init__(self, tri: Triangulation, params: ObjectiveParams,
                 schedule: Schedule, rng: random.Random,
                 strategies: Optional[Iterable[str]] = None,
                 on_accept: Optional[Callable[[Triangulation, Proposal], None]] = None):
        self.tri = tri
        self.params = params
        self.schedule = schedule
        self.rng = rng
        self.on_accept = on_accept
        self.movable = [vid for vid, v in enumerate(tri.verts)
                        if v.alive and v.dof != 0]
        names = list(strategies) if strategies is not None else list(ALL_STRATEGIES)
        for n in names:
            if n not in ALL_STRATEGIES:
                raise ValueError(f"unknown strategy {n!r}")
        count_max = max(2.0, len(self.movable) / 4.0)
        self.states: dict[str, StrategyState] = {}
        for n in names:
            if n in ("direct", "direct_group", "cluster", "cluster_group"):
                self.states[n] = StrategyState(n, 1.0, 1e-4, 1e3)
            else:
                self.states[n] = StrategyState(n, 1.0, 1.0, count_max)
        self._grid: Optional[UniformGrid] = None
        self._grid_eps = 0.0

    # -- proposal helpers ------------------------------------------------

    def _heavy_tailed_offset(self) -> tuple[float, float]:
        # Uniform unit-disk point with its radius boosted by a Pareto(1/2)
        # factor; heavy tails explore further than a Gaussian would.
        r = math.sqrt(self.rng.random())
        theta = self.rng.uniform(0.0, 2.0 * math.pi)
        factor = (1.0 - self.rng.random()) ** -2.0
        return r * factor * math.cos(theta), r * factor * math.sin(theta)

    def _project(self, vid: int, x: float, y: float) -> tuple[float, float]:
        v = self.tri.verts[vid]
        if v.dof != DOF_ON_SEGMENT:
            return x, y
        seg = self.tri.scene.segments[v.seg]
        u = seg.param_of(Point(x, y))
        u = min(max(u, 0.0), 1.0)
        p = seg.point_at(u)
        return p.x, p.y

    def _sample_in_star(self, vid: int) -> Optional[tuple[float, float]]:
        tids = list(self.tri.v2t[vid])
        if not tids:
            return None
        areas = [max(self.tri.tri_area(t), 0.0) for t in tids]
        total = sum(areas)
        if total <= 0.0:
            return None
        pick = self.rng.random() * total
        acc = 0.0
        tid = tids[-1]
        for t, ar in zip(tids, areas):
            acc += ar
            if pick <= acc:
                tid = t
                break
        va, vb, vc = (self.tri.pos(v) for v in self.tri.tris[tid].v)
        u1, u2 = self.rng.random(), self.rng.random()
        if u1 + u2 > 1.0:
            u1, u2 = 1.0 - u1, 1.0 - u2
        x = va.x + u1 * (vb.x - va.x) + u2 * (vc.x - va.x)
        y = va.y + u1 * (vb.y - va.y) + u2 * (vc.y - va.y)
        return self._project(vid, x, y)

    def _min_incident_edge(self, vid: int, at: Optional[tuple[float, float]] = None) -> float:
        p = at if at is not None else (self.tri.verts[vid].x, self.tri.verts[vid].y)
        best = math.inf
        for nb in self.tri.vertex_neighbors(vid):
            q = self.tri.verts[nb]
            best = min(best, math.hypot(q.x - p[0], q.y - p[1]))
        return best

    def _ensure_grid(self) -> UniformGrid:
        eps = self.params.eps
        if self._grid is None or eps < self._grid_eps / 2.0 or eps > self._grid_eps * 2.0:
            self._grid = UniformGrid(max(5.0 * eps, 1e-6))
            self._grid_eps = eps
            for vid in self.movable:
                v = self.tri.verts[vid]
                self._grid.insert(vid, v.x, v.y)
        return self._grid

    # -- strategies ------------------------------------------------------

    def _propose(self, name: str) -> Proposal:
        lam = self.states[name].lam
        if not self.movable and name != "flip_edges":
            return Proposal()
        if name in ("direct", "direct_group"):
            return self._propose_direct(lam, name.endswith("group"))
        if name in ("cluster", "cluster_group"):
            return self._propose_cluster(lam, name.endswith("group"))
        if name in ("resample_small", "resample_large"):
            return self._propose_resample(lam, name.endswith("small"))
        if name == "swap_contracted":
            return self._propose_swap(lam)
        if name == "contract_neighbor":
            return self._propose_contract_neighbor(lam)
        if name == "flip_edges":
            return self._propose_flips(lam)
        raise ValueError(name)

    def _propose_direct(self, lam: float, group: bool) -> Proposal:
        n = len(self.movable)
        count = max(1, math.ceil(GROUP_FRACTION * n)) if group else 1
        vids = self.rng.sample(self.movable, min(count, n))
        moves = []
        for vid in vids:
            eta = math.sqrt(max(self.tri.star_area(vid), 0.0))
            ox, oy = self._heavy_tailed_offset()
            v = self.tri.verts[vid]
            moves.append((vid, *self._project(vid, v.x + lam * eta * ox,
                                              v.y + lam * eta * oy)))
        return Proposal(moves=moves)

    def _propose_cluster(self, lam: float, group: bool) -> Proposal:
        n = len(self.movable)
        groups = max(1, math.ceil(GROUP_FRACTION * n)) if group else 1
        grid = self._ensure_grid()
        eps = self.params.eps
        picked: dict[int, tuple[float, float]] = {}
        for _ in range(groups):
            center = self.rng.choice(self.movable)
            cv = self.tri.verts[center]
            d = self.rng.uniform(0.5 * eps, 5.0 * eps)
            ids = grid.query_disk(cv.x, cv.y, d)
            if not ids:
                continue
            tids = set()
            for vid in ids:
                tids |= self.tri.v2t[vid]
            area = sum(max(self.tri.tri_area(t), 0.0) for t in tids)
            eta = math.sqrt(area)
            ox, oy = self._heavy_tailed_offset()
            dx, dy = lam * eta * ox, lam * eta * oy
            for vid in ids:
                v = self.tri.verts[vid]
                picked[vid] = self._project(vid, v.x + dx, v.y + dy)
        return Proposal(moves=[(vid, x, y) for vid, (x, y) in picked.items()])

    def _pick_movable(self, want: int, pred) -> list[int]:
        out: list[int] = []
        seen: set[int] = set()
        budget = 30 * want + 10
        while len(out) < want and budget > 0:
            budget -= 1
            vid = self.rng.choice(self.movable)
            if vid in seen:
                continue
            if pred(vid):
                seen.add(vid)
                out.append(vid)
        return out

    def _propose_resample(self, lam: float, small: bool) -> Proposal:
        thr = RESAMPLE_AREA_FACTOR * self.params.eps ** 2
        want = max(1, round(lam))

        def pred(vid: int) -> bool:
            a = self.tri.star_area(vid)
            return a < thr if small else a >= thr

        moves = []
        for vid in self._pick_movable(want, pred):
            p = self._sample_in_star(vid)
            if p is not None:
                moves.append((vid, p[0], p[1]))
        return Proposal(moves=moves)

    def _propose_swap(self, lam: float) -> Proposal:
        eps = self.params.eps
        length = self.rng.uniform(0.2 * eps, 2.0 * eps)
        want = max(1, round(lam))
        vids = self._pick_movable(want, lambda v: self._min_incident_edge(v) < length)
        moves = []
        for vid in vids:
            nbrs = sorted(self.tri.vertex_neighbors(vid))
            if not nbrs:
                continue
            nb = self.tri.verts[self.rng.choice(nbrs)]
            r = length * math.sqrt(self.rng.random())
            th = self.rng.uniform(0.0, 2.0 * math.pi)
            moves.append((vid, *self._project(vid, nb.x + r * math.cos(th),
                                              nb.y + r * math.sin(th))))
        return Proposal(moves=moves)

    def _propose_contract_neighbor(self, lam: float) -> Proposal:
        eps = self.params.eps
        want = max(1, round(lam))
        moves = []
        for _ in range(want):
            vid = self.rng.choice(self.movable)
            was = self._min_incident_edge(vid) < eps
            p = self._sample_in_star(vid)
            if p is None:
                continue
            now = self._min_incident_edge(vid, at=p) < eps
            if was == now:
                continue  # try-once rejection: keep the original position
            moves.append((vid, p[0], p[1]))
        return Proposal(moves=moves)

    def _propose_flips(self, lam: float) -> Proposal:
        want = max(1, round(lam))
        flips = []
        seen: set[tuple[int, int]] = set()
        budget = 30 * want + 10
        nt = len(self.tri.tris)
        while len(flips) < want and budget > 0:
            budget -= 1
            tid = self.rng.randrange(nt)
            t = self.tri.tris[tid]
            if t is None:
                continue
            i = self.rng.randrange(3)
            if t.flag[i] != INTERNAL or t.nbr[i] is None:
                continue
            a, b = self.tri.edge_verts(tid, i)
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            flips.append((tid, i))
        return Proposal(flips=flips)

    # -- evaluation ------------------------------------------------------

    def _try_moves(self, prop: Proposal, temperature: float) -> tuple[bool, float, int]:
        tri, params = self.tri, self.params
        moved = [vid for vid, _, _ in prop.moves]
        pairs, angle_tris = move_region(tri, moved, params)
        before = local_objective(tri, params, pairs, angle_tris)
        old = [(vid, tri.verts[vid].x, tri.verts[vid].y) for vid in moved]
        for vid, x, y in prop.moves:
            tri.verts[vid].x = x
            tri.verts[vid].y = y
        ok = True
        for tid in angle_tris:
            t = tri.tris[tid]
            pts = [tri.pos(v) for v in t.v]
            if orient2d(*pts) is not Orientation.POSITIVE:
                ok = False
                break
        cost = 2 * len(pairs) + len(prop.moves) + 3
        if not ok:
            for vid, x, y in old:
                tri.verts[vid].x = x
                tri.verts[vid].y = y
            return False, 0.0, cost
        after = local_objective(tri, params, pairs, angle_tris)
        df = after - before
        if metropolis_accept(df, temperature, self.rng):
            if self._grid is not None:
                for vid, x, y in prop.moves:
                    self._grid.move(vid, x, y)
            return True, df, cost
        for vid, x, y in old:
            tri.verts[vid].x = x
            tri.verts[vid].y = y
        return False, 0.0, cost

    def _try_flips(self, prop: Proposal, temperature: float) -> tuple[bool, float, int]:
        tri, params = self.tri, self.params
        quad_verts: set[int] = set()
        plan: list[tuple[int, int]] = []
        for t, i in prop.flips:
            if tri.tris[t] is None:
                continue
            m = tri.mirror(t, i)
            if m is None or tri.tris[t].flag[i] != INTERNAL:
                continue
            a, b = tri.edge_verts(t, i)
            quad_verts.update((tri.tris[t].v[i], a, b, tri.tris[m[0]].v[m[1]]))
            plan.append((t, i))
        if not plan:
            return False, 0.0, 2
        pairs0, tris0 = flip_region(tri, quad_verts, params)
        applied: list[tuple[tuple[int, int], tuple[int, int]]] = []
        for t, i in plan:
            if tri.tris[t] is None:
                continue
            a, b = tri.edge_verts(t, i)
            if {a, b} & {x for pr in applied for x in pr[1]}:
                pass  # later flips may involve earlier diagonals; re-resolve below
            loc = tri.find_edge(a, b)
            if loc is None:
                continue
            p = tri.tris[loc[0]].v[loc[1]]
            m = tri.mirror(*loc)
            if m is None:
                continue
            q = tri.tris[m[0]].v[m[1]]
            if tri.flip_edge(*loc) is FlipResult.FLIPPED:
                applied.append(((a, b), (p, q)))
        if not applied:
            return False, 0.0, 2
        pairs1, tris1 = flip_region(tri, quad_verts, params)
        pairs = pairs0 | pairs1
        atris = tris0 | tris1
        after = local_objective(tri, params, pairs, atris)
        self._revert_flips(applied)
        before = local_objective(tri, params, pairs, atris)
        df = after - before
        cost = 2 * len(pairs) + len(applied) + 3
        if metropolis_accept(df, temperature, self.rng):
            for orig, diag in applied:
                loc = tri.find_edge(*orig)
                res = tri.flip_edge(*loc)
                assert res is FlipResult.FLIPPED
            return True, df, cost
        return False, 0.0, cost

    def _revert_flips(self, applied: list[tuple[tuple[int, int], tuple[int, int]]]) -> None:
        for orig, diag in reversed(applied):
            loc = self.tri.find_edge(*diag)
            res = self.tri.flip_edge(*loc)
            assert res is FlipResult.FLIPPED

    # -- main loop ---------------------------------------------------------

    def run(self, max_proposals: Optional[int] = None,
            max_seconds: Optional[float] = None) -> AnnealResult:
        tri = self.tri
        started = time.perf_counter()
        best_f = math.inf
        best_snapshot = tri.copy()
        best_snapshot_f = math.inf
        f_cur = 0.0
        n_prop = n_acc = 0
        result_log: list[str] = []
        out_of_budget = False
        for level in range(self.schedule.levels):
            temperature, eps = self.schedule.at(level)
            self.params.eps = eps
            f_cur = objective(tri, self.params).f_total
            best_f = min(best_f, f_cur)
            for _ in range(self.schedule.steps_per_level):
                if max_proposals is not None and n_prop >= max_proposals:
                    out_of_budget = True
                    break
                if max_seconds is not None and \
                        time.perf_counter() - started > max_seconds:
                    out_of_budget = True
                    break
                state = min(self.states.values(),
                            key=lambda s: (s.cost_units, s.name))
                t0 = time.perf_counter()
                prop = self._propose(state.name)
                n_prop += 1
                if prop.empty:
                    accepted, df, cost = False, 0.0, 2
                elif prop.flips:
                    accepted, df, cost = self._try_flips(prop, temperature)
                else:
                    accepted, df, cost = self._try_moves(prop, temperature)
                state.attempts += 1
                state.total_attempts += 1
                state.cost_units += cost
                state.wall_time += time.perf_counter() - t0
                if accepted:
                    state.accepts += 1
                    state.total_accepts += 1
                    n_acc += 1
                    f_cur += df
                    if f_cur < best_f:
                        best_f = f_cur
                    if self.on_accept is not None:
                        self.on_accept(tri, prop)
                if state.attempts >= ADAPT_WINDOW:
                    adapt_lambda(state)
            if f_cur < best_snapshot_f:
                best_snapshot = tri.copy()
                best_snapshot_f = f_cur
            acc_bits = ",".join(f"{s.name}:{s.acceptance:.2f}"
                                for s in self.states.values())
            line = (f"level={level} T={temperature:.4e} eps={eps:.4e} "
                    f"f={f_cur:.6f} best={best_f:.6f} acc={acc_bits}")
            result_log.append(line)
            logger.info(line)
            if out_of_budget:
                break
        final_f = objective(tri, self.params).f_total
        if final_f <= best_snapshot_f:
            best_snapshot = tri.copy()
            best_snapshot_f = final_f
        return AnnealResult(final=tri, best=best_snapshot,
                            best_f=min(best_f, best_snapshot_f), final_f=final_f,
                            proposals=n_prop, accepted=n_acc, log=result_log,
                            strategies=dict(self.states))


def run_annealing(tri: Triangulation, schedule: Schedule, params: ObjectiveParams,
                  rng: Optional[random.Random] = None,
                  strategies: Optional[Iterable[str]] = None,
                  max_proposals: Optional[int] = None,
                  max_seconds: Optional[float] = None,
                  on_accept=None) -> AnnealResult:
    """Anneal the triangulation in place; returns the final state plus the
    best state seen (sampled at level ends) and per-strategy statistics."""
    if rng is None:
        rng = random.Random(0)
    eng = Annealer(tri, params, schedule, rng, strategies, on_accept)
    return eng.run(max_proposals=max_proposals, max_seconds=max_seconds)


# ----------------------------------------------------------------------
# contraction and polishing

def contract_pass(tri: Triangulation, params: ObjectiveParams) -> int:
    """Contract every currently-contractible edge shorter than eps, shortest
    first. Returns the number of contractions performed."""
    eps = params.eps
    cands = []
    for t, i, a, b in tri.iter_edges():
        va, vb = tri.verts[a], tri.verts[b]
        length = math.hypot(vb.x - va.x, vb.y - va.y)
        if length < eps:
            cands.append((length, a, b))
    cands.sort()
    done = 0
    for _, a, b in cands:
        if not (tri.verts[a].alive and tri.verts[b].alive):
            continue
        loc = tri.find_edge(a, b)
        if loc is None:
            continue
        if tri.edge_length(*loc) >= eps:
            continue
        if is_contractible(tri, loc[0], loc[1], params) is not None:
            continue
        if tri.contract_edge(*loc).ok:
            done += 1
    return done


def contract_all_short(tri: Triangulation, params: ObjectiveParams) -> int:
    """Contract short edges in passes, retrying previously blocked edges after
    every pass that makes progress."""
    total = 0
    while True:
        done = contract_pass(tri, params)
        total += done
        if done == 0:
            return total


def greedy_flip_pass(tri: Triangulation) -> int:
    """Flip internal edges whose opposite diagonal is strictly shorter, until
    no such flip remains. Returns the number of flips."""
    total = 0
    while True:
        done = 0
        for t, i, a, b in list(tri.iter_edges()):
            if tri.tris[t] is None:
                continue
            loc = tri.find_edge(a, b)
            if loc is None:
                continue
            t2, i2 = loc
            if tri.tris[t2].flag[i2] != INTERNAL:
                continue
            m = tri.mirror(t2, i2)
            if m is None:
                continue
            p = tri.tris[t2].v[i2]
            q = tri.tris[m[0]].v[m[1]]
            pa, pb = tri.pos(a), tri.pos(b)
            pp, pq = tri.pos(p), tri.pos(q)
            if math.hypot(pp.x - pq.x, pp.y - pq.y) < \
                    math.hypot(pa.x - pb.x, pa.y - pb.y) - 1e-15:
                if tri.flip_edge(t2, i2) is FlipResult.FLIPPED:
                    done += 1
        total += done
        if done == 0:
            return total


def contract_and_polish(tri: Triangulation, params: ObjectiveParams,
                        schedule: Schedule, rng: Optional[random.Random] = None,
                        polish_fraction: float = 0.1,
                        stop_factor: float = 1.1, eps_growth: float = 1.3,
                        max_rounds: int = 40,
                        on_accept=None) -> Triangulation:
    """Bake fuzzy contraction into real topology.

    Repeats: contract all short edges (shortest first, with retries), then
    alternate short low-temperature polish runs (fuzzy contraction disabled,
    sharp-angle penalty on, contraction strategies off) with greedy
    shorter-diagonal flip passes until they stop helping. The contraction
    length then grows by `eps_growth` and the loop continues until the
    current length exceeds `stop_factor` times the best seen, which is
    returned.
    """
    if rng is None:
        rng = random.Random(0)
    best = tri.copy()
    best_len = tri.total_edge_length()
    params = params.with_eps(params.eps)
    polish_total = max(200, int(polish_fraction * schedule.levels
                                * schedule.steps_per_level))
    polish_levels = max(3, schedule.levels // 10)
    polish_sched = Schedule(
        t_init=schedule.t_final * 3.0, t_final=schedule.t_final,
        eps_init=params.eps, eps_final=params.eps,
        levels=polish_levels,
        steps_per_level=max(1, polish_total // polish_levels))
    polish_strategies = [s for s in ALL_STRATEGIES if s not in CONTRACTION_STRATEGIES]
    for _ in range(max_rounds):
        contract_all_short(tri, params)
        prev = tri.total_edge_length()
        for _ in range(8):
            pparams = replace(params, fuzzy_enabled=False, polish_mode=True,
                              eps=params.eps)
            psched = replace(polish_sched, eps_init=params.eps, eps_final=params.eps)
            run_annealing(tri, psched, pparams, rng=rng,
                          strategies=polish_strategies, on_accept=on_accept)
            contract_all_short(tri, params)
            greedy_flip_pass(tri)
            cur = tri.total_edge_length()
            if cur > prev - 1e-9:
                break
            prev = cur
        length = tri.total_edge_length()
        if length < best_len:
            best_len = length
            best = tri.copy()
        if length > stop_factor * best_len:
            break
        new_eps = params.eps * eps_growth
        if new_eps > 0.5:
            break
        params = params.with_eps(new_eps)
    return best


# ----------------------------------------------------------------------
# the full pipeline

@dataclass
class PipelineConfig:
    schedule: Schedule = field(default_factory=Schedule)
    iterations: int = 2
    seed: int = 0
    polish_fraction: float = 0.1
    stop_factor: float = 1.1
    eps_growth: float = 1.3
    angle_grid: Optional[list[float]] = None
    area_grid: Optional[list[float]] = None
    strategies: Optional[list[str]] = None
    eps0: float = 1e-10
    mu_angle: float = 1.0
    mu_minlen: float = 10.0
    max_seconds: Optional[float] = None

    def to_file(self, path: str) -> None:
        s = self.schedule
        pairs = [("t_init", s.t_init), ("t_final", s.t_final),
                 ("eps_init", s.eps_init), ("eps_final", s.eps_final),
                 ("levels", s.levels), ("steps_per_level", s.steps_per_level),
                 ("iterations", self.iterations), ("seed", self.seed),
                 ("polish_fraction", self.polish_fraction),
                 ("stop_factor", self.stop_factor),
                 ("eps_growth", self.eps_growth),
                 ("strategies", ",".join(self.strategies) if self.strategies else "all")]
        with open(path, "w") as fh:
            for k, v in pairs:
                fh.write(f"{k} = {v}\n")

    @classmethod
    def from_file(cls, path: str) -> "PipelineConfig":
        kv: dict[str, str] = {}
        with open(path) as fh:
            for ln, raw in enumerate(fh, 1):
                line = raw.split("#")[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ValueError(f"{path}:{ln}: expected 'key = value'")
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
        sched = Schedule(
            t_init=float(kv.get("t_init", 0.02)),
            t_final=float(kv.get("t_final", 1e-4)),
            eps_init=float(kv.get("eps_init", 0.05)),
            eps_final=float(kv.get("eps_final", 1e-4)),
            levels=int(kv.get("levels", 200)),
            steps_per_level=int(kv.get("steps_per_level", 200)))
        strat = kv.get("strategies", "all")
        return cls(schedule=sched,
                   iterations=int(kv.get("iterations", 2)),
                   seed=int(kv.get("seed", 0)),
                   polish_fraction=float(kv.get("polish_fraction", 0.1)),
                   stop_factor=float(kv.get("stop_factor", 1.1)),
                   eps_growth=float(kv.get("eps_growth", 1.3)),
                   strategies=None if strat == "all" else strat.split(","))


@dataclass
class PipelineResult:
    triangulation: Triangulation
    lengths: dict[str, float]
    logs: list[str] = field(default_factory=list)


def full_pipeline(scene: Scene, config: Optional[PipelineConfig] = None) -> PipelineResult:
    """Optimally refined CDT, then repeated anneal + contract-and-polish with
    an intermediate 4-way subdivision between iterations. Returns the
    minimum-length triangulation across all stages (never worse than the
    refined CDT baseline)."""
    if config is None:
        config = PipelineConfig()
    sched = config.schedule
    rng = random.Random(config.seed)
    base = optimal_refined_cdt(scene, config.angle_grid, config.area_grid)
    best = base.copy()
    best_len = base.total_edge_length()
    lengths = {"optimal_refined_cdt": best_len}
    logs: list[str] = []
    cur = base
    started = time.perf_counter()
    for it in range(config.iterations):
        if it > 0:
            cur = cur.subdivide()
        params = ObjectiveParams(eps=sched.eps_init, eps0=config.eps0,
                                 mu_angle=config.mu_angle, mu_minlen=config.mu_minlen)
        remaining = None
        if config.max_seconds is not None:
            remaining = max(1.0, config.max_seconds - (time.perf_counter() - started))
        res = run_annealing(cur, sched, params, rng=rng,
                            strategies=config.strategies, max_seconds=remaining)
        logs.extend(res.log)
        cur = res.final
        end_params = params.with_eps(sched.eps_final)
        cur = contract_and_polish(cur, end_params, sched, rng=rng,
                                  polish_fraction=config.polish_fraction,
                                  stop_factor=config.stop_factor,
                                  eps_growth=config.eps_growth)
        length = cur.total_edge_length()
        lengths[f"iteration_{it + 1}"] = length
        if length < best_len:
            best_len = length
            best = cur.copy()
    lengths["best"] = best_len
    return PipelineResult(best, lengths, logs)
