"""Budgeted generation of independent random walks by doubling and stitching.

A walk of length L (a power of two) is assembled from pre-generated length-1
segments in log2(L) phases: in phase j every segment whose first step label
is 1 mod 2^j asks the vertex at its end for a segment covering the next
2^(j-1) labels, and the serving vertex answers each request with a distinct,
uniformly chosen segment from its stock. Stocks are sized by per-(vertex,
label) budgets. A calibration loop re-estimates the budgets from the rooted
walks of the previous cycle, growing the root's budget geometrically until
the requested number of rooted walks exists.

Two operating modes:

* "theory": segments are bucketed per (vertex, label) and budgets carry a
  surplus factor tau^(3k-3) on label k.
* "practical": budgets are still computed per (vertex, label) but serving is
  label-free (any stock segment of the right length can answer any request),
  with a gentler surplus of tau^(log2(L) - v2(k-1)) on label k>1, where v2
  is the 2-adic valuation. This caps the surplus blow-up at tau^(log2 L)
  while keeping one factor of tau of serving headroom in every phase.

All randomness is drawn from substreams keyed by (seed, group, cycle, phase,
vertex), so runs are replayable and schedule-independent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Dict, List, Sequence, Tuple

import numpy as np

from .graph import Graph
from .mpc import Cluster, KIND_REPLY, KIND_REQUEST, KIND_UPDATE
from .rng import INIT_STREAM, SERVE_STREAM, SHUFFLE_STREAM, derive_key, substream

_ENGINE_NS = 0x10  # namespace tag folded into every engine substream key

LAZINESS = ("none", "half")
MODES = ("theory", "practical")
FAIL_POLICIES = ("abort", "tolerate")


class EngineError(RuntimeError):
    pass


class ParameterError(ValueError):
    pass


class StitchFailure(EngineError):
    """A serving stock ran dry in abort mode."""

    def __init__(self, vertex: int, label: int | None, phase: int, deficit: int, cycle: int):
        label_txt = f"label {label}" if label is not None else "pooled stock"
        super().__init__(
            f"stitch failed: vertex {vertex}, {label_txt}, phase {phase}, "
            f"cycle {cycle}, deficit {deficit}")
        self.vertex = vertex
        self.label = label
        self.phase = phase
        self.deficit = deficit
        self.cycle = cycle


def round_length(length: int) -> int:
    """Smallest power of two >= length."""
    if length < 1:
        raise ParameterError("walk length must be >= 1")
    return 1 << (length - 1).bit_length()


def growth_power(growth: float, exponent: int) -> float:
    """growth**exponent by repeated multiplication (reproducible arithmetic)."""
    p = 1.0
    for _ in range(exponent):
        p *= growth
    return p


@dataclass(frozen=True)
class StitchParams:
    """Parameters of one budgeted run.

    length: walk length, a power of two (use round_length / theory_params).
    target: requested number of rooted walks.
    growth: per-cycle scale-up of the root budget (> 1).
    threshold: minimum visit count for a budget estimate to be trusted.
    base_budget: budget per unit of degree underlying every vertex.
    surplus: stock head-room factor between consecutive stitch levels.
    """

    length: int
    target: int
    growth: float
    threshold: float
    base_budget: float
    surplus: float
    laziness: str = "none"
    mode: str = "practical"
    fail_policy: str = "tolerate"
    confidence: float = 1.0
    scale: float = 1.0

    def __post_init__(self):
        if self.length < 1 or self.length & (self.length - 1):
            raise ParameterError(f"length {self.length} is not a power of two")
        if self.target < 1:
            raise ParameterError("target must be >= 1")
        if self.growth <= 1:
            raise ParameterError("growth factor must be > 1")
        if self.threshold <= 0 or self.base_budget <= 0:
            raise ParameterError("threshold and base_budget must be positive")
        min_surplus = 1.0 if self.mode == "practical" else 1.0 + 1e-12
        if self.surplus < min_surplus:
            raise ParameterError("surplus must be > 1 (>= 1 in practical mode)")
        if self.laziness not in LAZINESS:
            raise ParameterError(f"laziness must be one of {LAZINESS}")
        if self.mode not in MODES:
            raise ParameterError(f"mode must be one of {MODES}")
        if self.fail_policy not in FAIL_POLICIES:
            raise ParameterError(f"fail_policy must be one of {FAIL_POLICIES}")

    @property
    def lazy(self) -> bool:
        return self.laziness == "half"


def theory_params(n: int, length: int, growth: float, confidence: float = 1.0, *,
                  target: int, scale: float = 1.0, laziness: str = "none",
                  fail_policy: str = "abort") -> StitchParams:
    """Analysis-grade parameter settings (natural logarithm throughout).

    threshold = scale * 10 * C * L^2 * ln n
    base      = scale * 30 * C * growth * L^3 * ln n
    surplus   = 1 + sqrt(20 * C * ln n / threshold)

    `scale` shrinks threshold and base together so small instances stay
    feasible; the no-fail algebra needs base >= 3*growth*threshold *
    sqrt(threshold / (20*C*ln n)), which is checked and warned about here
    (it holds automatically for scale <= 2).
    """
    if n < 2:
        raise ParameterError("n must be >= 2")
    if growth <= 1:
        raise ParameterError("growth factor must be > 1")
    if confidence < 1:
        raise ParameterError("confidence must be >= 1")
    if scale <= 0:
        raise ParameterError("scale must be positive")
    length = round_length(length)
    log_n = math.log(n)
    theta = scale * 10.0 * confidence * length * length * log_n
    base = scale * 30.0 * confidence * growth * length ** 3 * log_n
    tau = 1.0 + math.sqrt(20.0 * confidence * log_n / theta)
    floor = 3.0 * growth * theta * math.sqrt(theta / (20.0 * confidence * log_n))
    if base < floor:
        warnings.warn(
            f"base budget {base:.3g} below no-fail floor {floor:.3g}; "
            "stitching may exhaust stocks", RuntimeWarning, stacklevel=2)
    return StitchParams(length=length, target=target, growth=growth,
                        threshold=theta, base_budget=base, surplus=tau,
                        laziness=laziness, mode="theory", fail_policy=fail_policy,
                        confidence=confidence, scale=scale)


def desk_params(length: int, target: int, *, growth: float = 10.0,
                threshold: float = 30.0, base_budget: float = 20.0,
                tau: float = 1.4, laziness: str = "none",
                fail_policy: str = "tolerate", mode: str = "practical") -> StitchParams:
    """Hand-tuned constants for desk-scale experiments."""
    return StitchParams(length=round_length(length), target=target, growth=growth,
                        threshold=threshold, base_budget=base_budget, surplus=tau,
                        laziness=laziness, mode=mode, fail_policy=fail_policy)


def label_multipliers(params: StitchParams) -> np.ndarray:
    """Per-label surplus factors, index k-1 for label k."""
    ks = np.arange(1, params.length + 1, dtype=np.int64)
    if params.mode == "theory":
        return params.surplus ** (3.0 * (ks - 1))
    levels = params.length.bit_length() - 1
    expo = np.zeros(params.length, dtype=np.int64)
    if params.length > 1:
        rest = ks[1:] - 1
        v2 = np.round(np.log2(rest & -rest)).astype(np.int64)
        expo[1:] = levels - v2
    return params.surplus ** expo.astype(float)


@dataclass
class BudgetTable:
    """Per-(vertex, label) walk budgets, dense (n, length) array of ints."""

    values: np.ndarray

    def total(self) -> int:
        return int(self.values.sum())

    def per_vertex_totals(self) -> np.ndarray:
        return self.values.sum(axis=1)

    def csv_lines(self):
        yield "vertex,label,budget"
        vs, ks = np.nonzero(self.values)
        for v, k in zip(vs, ks):
            yield f"{v},{k + 1},{self.values[v, k]}"


def _budget_from_float(g: Graph, raw: np.ndarray) -> BudgetTable:
    vals = np.ceil(raw).astype(np.int64)
    vals[g.degrees == 0, :] = 0
    return BudgetTable(vals)


def initial_budgets(g: Graph, params: StitchParams) -> BudgetTable:
    """Stationary-proportional start: base_budget * degree(v) * multiplier(k)."""
    mult = label_multipliers(params)
    raw = (params.base_budget * g.degrees.astype(float))[:, None] * mult[None, :]
    return _budget_from_float(g, raw)


def update_budgets(walks: np.ndarray, exponent: int, params: StitchParams,
                   g: Graph, num_roots: int = 1) -> BudgetTable:
    """Re-estimate budgets from one cycle's rooted walks.

    For label k, kappa(v) counts walks whose k-th vertex (the vertex reached
    after k-1 steps) is v. Entries with kappa >= threshold get
    (base(v) + num_roots * growth^exponent * kappa / |W|) * multiplier(k);
    the rest fall back to base(v) * multiplier(k). Budgets round up.
    """
    if walks.ndim != 2 or walks.shape[0] == 0:
        raise EngineError("budget update requires a non-empty set of rooted walks")
    if walks.shape[1] != params.length + 1:
        raise EngineError(
            f"rooted walks must have length {params.length}, got {walks.shape[1] - 1}")
    w_count = walks.shape[0]
    lam_pow = growth_power(params.growth, exponent)
    mult = label_multipliers(params)
    base = params.base_budget * g.degrees.astype(float)
    counts = np.empty((params.length, g.n), dtype=np.int64)
    for k in range(params.length):
        counts[k] = np.bincount(walks[:, k], minlength=g.n)
    # product before division keeps integer-valued estimates exact
    kappa_term = (lam_pow * num_roots) * counts.astype(float) / w_count
    raw = np.where(counts >= params.threshold, base[None, :] + kappa_term, base[None, :])
    raw = raw * mult[:, None]
    return _budget_from_float(g, raw.T)


@dataclass
class WalkStore:
    """Homogeneous-length walk segments: row i is verts[i] with first step
    label labels[i]. All segments in a store belong to one budgeting cycle."""

    verts: np.ndarray   # (N, s+1) int32
    labels: np.ndarray  # (N,) int16
    cycle: int

    @property
    def segment_length(self) -> int:
        return self.verts.shape[1] - 1


def init_walks(g: Graph, budgets: BudgetTable, params: StitchParams,
               master_seed: int, cycle: int = 1) -> WalkStore:
    """Materialize budgets as length-1 segments (uniform incident edges).

    With laziness="half" each segment is, independently with probability 1/2,
    the self-step (v, v) instead of a uniform neighbor step.
    """
    values = budgets.values
    if values.shape != (g.n, params.length):
        raise EngineError("budget table shape does not match graph/params")
    isolated = np.flatnonzero((g.degrees == 0) & (values.sum(axis=1) > 0))
    if isolated.size:
        raise EngineError(f"positive budget on isolated vertex {int(isolated[0])}")
    per_vertex = values.sum(axis=1)
    total = int(per_vertex.sum())
    labels = np.repeat(
        np.tile(np.arange(1, params.length + 1, dtype=np.int16), g.n), values.ravel())
    starts = np.repeat(np.arange(g.n, dtype=np.int32), per_vertex)
    ends = np.empty(total, dtype=np.int32)
    pos = 0
    for v in np.flatnonzero(per_vertex):
        cnt = int(per_vertex[v])
        gen = substream(master_seed, INIT_STREAM, cycle, int(v))
        picks = gen.integers(0, g.degrees[v], size=cnt)
        nbr = g.neighbors[g.offsets[v] + picks].astype(np.int32)
        if params.lazy:
            stay = gen.random(cnt) < 0.5
            nbr = np.where(stay, np.int32(v), nbr)
        ends[pos:pos + cnt] = nbr
        pos += cnt
    return WalkStore(verts=np.column_stack([starts, ends]), labels=labels, cycle=cycle)


@dataclass
class StitchResult:
    """Finished label-1 walks for every start vertex, plus failure log."""

    verts: np.ndarray                 # (K, length+1), all first-label 1
    cycle: int
    attempted_first: np.ndarray       # per-vertex count of label-1 segments created
    failed_chunks: List[Tuple[int, np.ndarray]] = field(default_factory=list)
    served: int = 0
    removed: int = 0

    def walks_from(self, v: int) -> np.ndarray:
        return self.verts[self.verts[:, 0] == v]

    def failed_count_from(self, roots: Sequence[int]) -> int:
        roots_arr = np.asarray(list(roots))
        return sum(int(np.isin(chunk[:, 0], roots_arr).sum())
                   for _, chunk in self.failed_chunks)


def stitch(g: Graph, budgets: BudgetTable, params: StitchParams, cluster: Cluster,
           master_seed: int, cycle: int = 1) -> StitchResult:
    """One full doubling pass: init segments, then log2(length) phases.

    Each phase costs two supersteps (requests, then replies). Serving draws
    distinct uniform segments via the serving vertex's substream; when a
    stock is short, fail_policy decides between aborting the run and
    dropping the unserved walks (which are logged if they carry label 1).

    Message words: a request is 3 words, a reply carrying a length-s segment
    is s+4 words (s+1 vertices, first label, cycle tag, requester segment id).
    """
    store = init_walks(g, budgets, params, master_seed, cycle)
    verts, labels = store.verts, store.labels
    attempted_first = np.bincount(verts[labels == 1, 0], minlength=g.n)
    failed_chunks: List[Tuple[int, np.ndarray]] = []
    served_total = 0
    key_span = params.length + 1
    phases = params.length.bit_length() - 1

    for phase in range(1, phases + 1):
        s = 1 << (phase - 1)
        two_s = 2 * s
        lab_mod = labels % two_s
        req_idx = np.flatnonzero(lab_mod == 1)
        srv_idx = np.flatnonzero(lab_mod == (s + 1) % two_s)

        dest = verts[req_idx, -1].astype(np.int64)
        sender = verts[req_idx, 0].astype(np.int64)
        cluster.exchange_bulk(dest, sender, words=3, kind=KIND_REQUEST)

        if params.mode == "theory":
            req_key = dest * key_span + (labels[req_idx].astype(np.int64) + s)
            srv_key = verts[srv_idx, 0].astype(np.int64) * key_span \
                + labels[srv_idx].astype(np.int64)
        else:
            req_key = dest
            srv_key = verts[srv_idx, 0].astype(np.int64)

        # canonical serving order: key, then sender, then submission order
        req_order = np.lexsort((req_idx, sender, req_key))
        req_sorted = req_idx[req_order]
        rkeys, rstarts, rcounts = np.unique(req_key[req_order],
                                            return_index=True, return_counts=True)
        srv_order = np.lexsort((srv_idx, srv_key))
        srv_sorted = srv_idx[srv_order]
        skeys, sstarts, scounts = np.unique(srv_key[srv_order],
                                            return_index=True, return_counts=True)
        spos = np.searchsorted(skeys, rkeys)

        served_req_parts: List[np.ndarray] = []
        served_srv_parts: List[np.ndarray] = []
        failed_parts: List[np.ndarray] = []
        gens: Dict[int, np.random.Generator] = {}

        for gi in range(rkeys.size):
            key = int(rkeys[gi])
            if params.mode == "theory":
                z, needed = divmod(key, key_span)
            else:
                z, needed = key, None
            p = int(spos[gi])
            have = p < skeys.size and skeys[p] == key
            stock = int(scounts[p]) if have else 0
            want = int(rcounts[gi])
            group_req = req_sorted[rstarts[gi]:rstarts[gi] + want]
            gen = gens.get(z)
            if gen is None:
                gen = substream(master_seed, SERVE_STREAM, cycle, phase, z)
                gens[z] = gen
            if want <= stock:
                perm = gen.permutation(stock)[:want]
                served_req_parts.append(group_req)
                served_srv_parts.append(srv_sorted[sstarts[p] + perm])
            else:
                if params.fail_policy == "abort":
                    raise StitchFailure(z, needed, phase, want - stock, cycle)
                if stock > 0:
                    keep = np.sort(gen.permutation(want)[:stock])
                    perm = gen.permutation(stock)
                    served_req_parts.append(group_req[keep])
                    served_srv_parts.append(srv_sorted[sstarts[p] + perm])
                    failed_parts.append(np.delete(group_req, keep))
                else:
                    failed_parts.append(group_req)

        if served_req_parts:
            served_req = np.concatenate(served_req_parts)
            served_srv = np.concatenate(served_srv_parts)
        else:
            served_req = np.empty(0, dtype=np.int64)
            served_srv = np.empty(0, dtype=np.int64)

        cluster.exchange_bulk(verts[served_req, 0].astype(np.int64),
                              verts[served_srv, 0].astype(np.int64),
                              words=s + 4, kind=KIND_REPLY)

        if failed_parts:
            failed_req = np.concatenate(failed_parts)
            first_label = failed_req[labels[failed_req] == 1]
            if first_label.size:
                failed_chunks.append((phase, verts[first_label].copy()))

        assert np.array_equal(verts[served_req, -1], verts[served_srv, 0])
        verts = np.concatenate([verts[served_req], verts[served_srv][:, 1:]], axis=1)
        labels = labels[served_req]
        served_total += int(served_req.size)

    assert np.all(labels == 1)
    return StitchResult(verts=verts, cycle=cycle, attempted_first=attempted_first,
                        failed_chunks=failed_chunks, served=served_total,
                        removed=served_total)


def cycle_plan(target: int, growth: float) -> Tuple[int, int]:
    """(calibration cycles, final exponent) for a rooted-walk target.

    Calibration runs floor(log_growth target) cycles; the last budget update
    uses exponent ceil(log_growth target) so at least `target` rooted walks
    are budgeted in the final stitch.
    """
    if target < 1:
        raise ParameterError("target must be >= 1")
    calib = 0
    p = 1.0
    while p * growth <= target * (1 + 1e-12):
        p *= growth
        calib += 1
    final_expo = calib if p >= target * (1 - 1e-12) else calib + 1
    return calib, final_expo


@dataclass
class CycleStats:
    cycle: int
    budget_total: int
    rooted_attempted: int
    rooted_ok: int
    exponent_used: int | None  # exponent of the update after this cycle

    @property
    def failure_rate(self) -> float:
        if self.rooted_attempted == 0:
            return 0.0
        return 1.0 - self.rooted_ok / self.rooted_attempted


@dataclass
class RunMetrics:
    cycles: int
    supersteps: int
    paper_rounds: int
    per_cycle_budget_totals: List[int]
    total_budget: int
    max_machine_words: int
    rooted_target: int
    rooted_ok: int
    rooted_attempted_final: int
    failure_rate_final: float
    violations: List[dict]

    def to_dict(self) -> dict:
        return {
            "cycles": self.cycles,
            "supersteps": self.supersteps,
            "paper_rounds": self.paper_rounds,
            "per_cycle_budget_totals": list(self.per_cycle_budget_totals),
            "total_budget": self.total_budget,
            "max_machine_words": self.max_machine_words,
            "rooted_target": self.rooted_target,
            "rooted_ok": self.rooted_ok,
            "rooted_attempted_final": self.rooted_attempted_final,
            "failure_rate_final": self.failure_rate_final,
            "violations": list(self.violations),
        }


@dataclass
class RunResult:
    walks: np.ndarray                  # ok rooted walks, (K, length+1)
    roots: Tuple[int, ...]
    params: StitchParams
    metrics: RunMetrics
    cycle_stats: List[CycleStats]
    failed_walks: List[Tuple[int, np.ndarray]]     # final-cycle rooted failures
    budget_history: List[BudgetTable] | None = None
    rooted_by_cycle: List[np.ndarray] | None = None

    def walks_from(self, root: int) -> np.ndarray:
        return self.walks[self.walks[:, 0] == root]


def _check_root(g: Graph, r: int) -> None:
    if not 0 <= r < g.n:
        raise ParameterError(f"root {r} out of range [0, {g.n})")
    if g.degrees[r] == 0:
        raise ParameterError(f"root {r} is isolated; walks are undefined from it")


def _run_group(g: Graph, roots: Sequence[int], params: StitchParams,
               cluster: Cluster, master_seed: int, group_id: int = 0,
               keep_history: bool = False) -> RunResult:
    for r in roots:
        _check_root(g, r)
    roots_arr = np.asarray(sorted(set(int(r) for r in roots)))
    if roots_arr.size != len(roots):
        raise ParameterError("duplicate roots")
    seed = derive_key(master_seed, _ENGINE_NS, group_id)
    calib, final_expo = cycle_plan(params.target, params.growth)
    weakest = float(params.base_budget * g.degrees[roots_arr].min())
    if calib > 0 and weakest < params.threshold:
        warnings.warn(
            f"root base budget {weakest:.3g} is below the significance threshold "
            f"{params.threshold:.3g}; calibration cannot grow the root budget",
            RuntimeWarning, stacklevel=3)

    budgets = initial_budgets(g, params)
    stats: List[CycleStats] = []
    history: List[BudgetTable] = []
    rooted_history: List[np.ndarray] = []
    last_res: StitchResult | None = None
    update_dests = np.flatnonzero(g.degrees > 0).astype(np.int64)
    update_senders = np.full(update_dests.size, int(roots_arr[0]), dtype=np.int64)

    for i in range(1, calib + 2):
        if keep_history:
            history.append(BudgetTable(budgets.values.copy()))
        budget_total = budgets.total()
        try:
            res = stitch(g, budgets, params, cluster, seed, cycle=i)
        except StitchFailure as exc:
            raise StitchFailure(exc.vertex, exc.label, exc.phase, exc.deficit, i) from None
        rooted_mask = np.isin(res.verts[:, 0], roots_arr)
        rooted = res.verts[rooted_mask]
        if keep_history:
            rooted_history.append(rooted.copy())
        attempted = int(res.attempted_first[roots_arr].sum())
        expo = None
        if i <= calib:
            if rooted.shape[0] == 0:
                raise EngineError(f"all rooted walks failed in calibration cycle {i}")
            expo = final_expo if i == calib else i
            budgets = update_budgets(rooted, expo, params, g, num_roots=roots_arr.size)
            cluster.exchange_bulk(update_dests, update_senders,
                                  words=params.length + 1, kind=KIND_UPDATE)
        stats.append(CycleStats(cycle=i, budget_total=budget_total,
                                rooted_attempted=attempted,
                                rooted_ok=int(rooted.shape[0]),
                                exponent_used=expo))
        last_res = res

    final = stats[-1]
    rooted_walks = last_res.verts[np.isin(last_res.verts[:, 0], roots_arr)]
    # store order reflects serving keys (walk midpoints); shuffle so that any
    # prefix of the returned walks is an unbiased uniform subsample
    shuffle = substream(seed, SHUFFLE_STREAM, calib + 1)
    rooted_walks = rooted_walks[shuffle.permutation(rooted_walks.shape[0])]
    failed_walks = [(phase, chunk[np.isin(chunk[:, 0], roots_arr)])
                    for phase, chunk in last_res.failed_chunks]
    failed_walks = [(p, c) for p, c in failed_walks if c.shape[0]]
    report = cluster.report()
    metrics = RunMetrics(
        cycles=calib + 1,
        supersteps=report["supersteps"],
        paper_rounds=report["paper_rounds"],
        per_cycle_budget_totals=[s.budget_total for s in stats],
        total_budget=sum(s.budget_total for s in stats),
        max_machine_words=report["max_machine_words"],
        rooted_target=params.target,
        rooted_ok=final.rooted_ok,
        rooted_attempted_final=final.rooted_attempted,
        failure_rate_final=final.failure_rate,
        violations=report["violations"],
    )
    return RunResult(walks=rooted_walks, roots=tuple(int(r) for r in roots_arr),
                     params=params, metrics=metrics, cycle_stats=stats,
                     failed_walks=failed_walks,
                     budget_history=history if keep_history else None,
                     rooted_by_cycle=rooted_history if keep_history else None)


def run_budgeted(g: Graph, root: int, params: StitchParams,
                 cluster: Cluster | None = None, seed: int = 0,
                 keep_history: bool = False) -> RunResult:
    """Generate params.target independent length-`length` walks from `root`.

    Runs floor(log_growth target) calibration cycles of stitch +
    budget update, then one final stitch; returns the rooted walks of the
    final cycle with round/memory metrics.
    """
    cluster = cluster or Cluster()
    return _run_group(g, [root], params, cluster, seed, group_id=0,
                      keep_history=keep_history)


def dyadic_decompose(budgets) -> List[Tuple[List[int], int]]:
    """Split a per-vertex budget vector into groups whose positive entries
    agree within a factor two (bucketed by floor(log2 b)); each group is
    served with its maximum entry as the common budget."""
    if isinstance(budgets, dict):
        items = sorted((int(v), int(b)) for v, b in budgets.items())
    else:
        arr = np.asarray(budgets)
        items = [(int(v), int(arr[v])) for v in range(arr.size) if arr[v] != 0]
    if any(b < 0 for _, b in items):
        raise ParameterError("budgets must be non-negative")
    items = [(v, b) for v, b in items if b > 0]
    if not items:
        raise ParameterError("budget vector must have at least one positive entry")
    groups: Dict[int, List[Tuple[int, int]]] = {}
    for v, b in items:
        groups.setdefault(b.bit_length() - 1, []).append((v, b))
    out: List[Tuple[List[int], int]] = []
    for level in sorted(groups):
        members = groups[level]
        out.append(([v for v, _ in members], max(b for _, b in members)))
    return out


@dataclass
class MultiSourceResult:
    walks_by_root: Dict[int, np.ndarray]
    requested: Dict[int, int]
    shortfall: Dict[int, int]
    group_results: List[RunResult]
    metrics: RunMetrics


def run_multi_source(g: Graph, budgets, params: StitchParams,
                     cluster: Cluster | None = None, seed: int = 0) -> MultiSourceResult:
    """Walks for an arbitrary per-vertex budget vector.

    The vector is decomposed dyadically; each group runs the equal-budget
    multi-root variant (rooted walks pooled across the group's roots, with
    the visit-count term scaled by the group size). Groups run sequentially
    here while modelling a parallel execution: memory is the sum over
    groups, rounds are reported as the maximum of any single group.
    """
    cluster = cluster or Cluster()
    groups = dyadic_decompose(budgets)
    if isinstance(budgets, dict):
        requested = {int(v): int(b) for v, b in budgets.items() if b > 0}
    else:
        arr = np.asarray(budgets)
        requested = {int(v): int(arr[v]) for v in np.flatnonzero(arr)}
    walks_by_root: Dict[int, np.ndarray] = {}
    results: List[RunResult] = []
    group_supersteps: List[int] = []
    group_rounds: List[int] = []
    for gi, (members, common) in enumerate(groups):
        before = cluster.ledger.superstep_count
        before_rounds = cluster.ledger.paper_rounds()
        p = replace(params, target=int(common))
        res = _run_group(g, members, p, cluster, seed, group_id=gi)
        group_supersteps.append(cluster.ledger.superstep_count - before)
        group_rounds.append(cluster.ledger.paper_rounds() - before_rounds)
        results.append(res)
        for r in members:
            walks_by_root[r] = res.walks_from(r)
    shortfall = {v: max(0, b - walks_by_root[v].shape[0]) for v, b in requested.items()}
    report = cluster.report()
    total_ok = sum(w.shape[0] for w in walks_by_root.values())
    attempted = sum(r.metrics.rooted_attempted_final for r in results)
    metrics = RunMetrics(
        cycles=sum(r.metrics.cycles for r in results),
        supersteps=max(group_supersteps),
        paper_rounds=max(group_rounds),
        per_cycle_budget_totals=[t for r in results
                                 for t in r.metrics.per_cycle_budget_totals],
        total_budget=sum(r.metrics.total_budget for r in results),
        max_machine_words=report["max_machine_words"],
        rooted_target=sum(requested.values()),
        rooted_ok=total_ok,
        rooted_attempted_final=attempted,
        failure_rate_final=(1.0 - total_ok / attempted) if attempted else 0.0,
        violations=report["violations"],
    )
    return MultiSourceResult(walks_by_root=walks_by_root, requested=requested,
                             shortfall=shortfall, group_results=results,
                             metrics=metrics)


@dataclass
class UniformResult:
    result: StitchResult
    params: StitchParams
    total_budget: int
    ok_per_vertex: np.ndarray
    metrics: RunMetrics


def uniform_stitching(g: Graph, b0_per_degree: float, length: int,
                      cluster: Cluster | None = None, seed: int = 0,
                      tau: float = 1.0, laziness: str = "none") -> UniformResult:
    """Single-cycle baseline: every vertex gets budget
    ceil(b0_per_degree * degree(v) * tau^(3k-3)) on every label k, i.e. the
    stationary-proportional allocation that yields walks from all vertices
    at once. Serving is pooled; failures are tolerated and reported."""
    if b0_per_degree < 1:
        raise ParameterError("b0_per_degree must be >= 1")
    if tau < 1:
        raise ParameterError("tau must be >= 1")
    length = round_length(length)
    params = StitchParams(length=length, target=1, growth=2.0, threshold=1.0,
                          base_budget=float(b0_per_degree), surplus=tau,
                          laziness=laziness, mode="practical", fail_policy="tolerate")
    ks = np.arange(1, length + 1, dtype=float)
    mult = float(tau) ** (3.0 * (ks - 1.0))
    raw = (b0_per_degree * g.degrees.astype(float))[:, None] * mult[None, :]
    budgets = _budget_from_float(g, raw)
    total = budgets.total()
    cluster = cluster or Cluster()
    run_seed = derive_key(seed, _ENGINE_NS, 0)
    res = stitch(g, budgets, params, cluster, run_seed, cycle=1)
    shuffle = substream(run_seed, SHUFFLE_STREAM, 1)
    res.verts = res.verts[shuffle.permutation(res.verts.shape[0])]
    ok_per_vertex = np.bincount(res.verts[:, 0], minlength=g.n)
    attempted = int(res.attempted_first.sum())
    ok = int(ok_per_vertex.sum())
    report = cluster.report()
    metrics = RunMetrics(
        cycles=1, supersteps=report["supersteps"], paper_rounds=report["paper_rounds"],
        per_cycle_budget_totals=[total], total_budget=total,
        max_machine_words=report["max_machine_words"],
        rooted_target=attempted, rooted_ok=ok, rooted_attempted_final=attempted,
        failure_rate_final=(1.0 - ok / attempted) if attempted else 0.0,
        violations=report["violations"])
    return UniformResult(result=res, params=params, total_budget=total,
                         ok_per_vertex=ok_per_vertex, metrics=metrics)


def validate_walks(g: Graph, verts: np.ndarray, lazy: bool) -> bool:
    """True iff every consecutive pair is an edge (or a self-step when lazy)."""
    if verts.ndim != 2 or verts.shape[0] == 0:
        return True
    a = verts[:, :-1].astype(np.int64).ravel()
    b = verts[:, 1:].astype(np.int64).ravel()
    edge_keys = np.repeat(np.arange(g.n, dtype=np.int64), g.degrees) * g.n + g.neighbors
    keys = a * g.n + b
    pos = np.searchsorted(edge_keys, keys)
    pos = np.minimum(pos, edge_keys.size - 1)
    ok = edge_keys[pos] == keys
    if lazy:
        ok |= a == b
    return bool(np.all(ok))
