"""
MCMC over graphs of graphs.

Two drivers are provided.  `run_coarsened` targets the posterior with the
likelihood and similarity functions raised to the power zeta, updating the
centers and the supergraph jointly with birth/death and move proposals.
`run_nested` targets the cut distribution: an outer chain samples centers
from the coarsened tessellation prior alone and, for each retained
tessellation, an independent inner chain samples the supergraph from its
conditional posterior.
"""

import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, asdict

import numpy as np

from .errors import ConfigError, GoGError, UnreachableProposal
from .ggm import GraphChainState, graph_flip_step, run_graph_chain
from .params import HyperParams
from .target import Evaluator
from .tessellation import tessellation_from_labels

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Schedule:
    iters: int
    burnin: int = 0
    thin: int = 1

    def __post_init__(self):
        if self.iters < 1 or self.thin < 1 or not 0 <= self.burnin < self.iters:
            raise ConfigError(
                f"invalid schedule iters={self.iters} burnin={self.burnin} thin={self.thin}"
            )

    def records(self, it):
        return it >= self.burnin and (it - self.burnin) % self.thin == 0

    @property
    def n_records(self):
        return len(range(self.burnin, self.iters, self.thin))


@dataclass(frozen=True)
class SampleRecord:
    iteration: int
    centers: list
    assignment: list
    superedges: list
    log_target: float

    def to_json(self):
        return json.dumps(asdict(self), separators=(",", ":"))

    @classmethod
    def from_json(cls, line):
        d = json.loads(line)
        return cls(
            int(d["iteration"]), [int(c) for c in d["centers"]],
            [int(a) for a in d["assignment"]],
            [[int(a), int(b)] for a, b in d["superedges"]], float(d["log_target"]),
        )

    def superedge_indices(self):
        """Superedges as pairs of supernode indices into `centers`."""
        pos = {c: k for k, c in enumerate(self.centers)}
        return frozenset(tuple(sorted((pos[a], pos[b]))) for a, b in self.superedges)


@dataclass
class ChainState:
    centers: tuple
    T: object
    edges: frozenset
    log_prior: float
    log_graph_prior: float
    log_lik: float

    @property
    def K(self):
        return len(self.centers)

    def log_target(self, zeta):
        return self.log_prior + self.log_graph_prior + zeta * self.log_lik

    def record(self, iteration, zeta):
        c = self.T.centers
        return SampleRecord(
            iteration, list(c), list(self.T.assignment),
            sorted([c[k], c[l]] for k, l in self.edges), self.log_target(zeta),
        )


def make_state(ev, centers, edges=frozenset()):
    T = ev.tessellation(centers)
    edges = frozenset(edges)
    return ChainState(
        T.centers, T, edges, ev.log_prior(T), ev.log_graph_prior(T, edges), ev.log_lik(T, edges)
    )


def pcs_of(ev, state):
    from .data import compute_pc_views

    return compute_pc_views(ev.X, state.T)


# Proposal machinery -------------------------------------------------------

def _birth_prob(K, p):
    if K == 1:
        return 1.0
    if K == p:
        return 0.0
    return 0.5


def log_q_centers(old, new, p):
    """log density of proposing center set `new` from `old` (birth, death or move)."""
    K, K_new = len(old), len(new)
    if K_new == K + 1:
        return math.log(_birth_prob(K, p)) - math.log(p - K)
    if K_new == K - 1:
        return math.log(1 - _birth_prob(K, p)) - math.log(K)
    if K_new == K and len(set(old) ^ set(new)) == 2:
        return -math.log(K) - math.log(p - K)
    raise UnreachableProposal("center sets are not one move apart")


def match_supernodes(T_from, T_to):
    """Map supernode indices of T_to to identical supernodes of T_from."""
    index = {m: k for k, m in enumerate(T_from.members)}
    return {k: index[m] for k, m in enumerate(T_to.members) if m in index}


def log_q_graph(T_from, edges_from, T_to, edges_to, xi_q):
    """
    log density of proposing `edges_to` given the tessellation move.

    Pairs of supernodes that both survive unchanged keep their superedge
    status; every other pair of T_to is resampled with probability xi_q.
    """
    matched = match_supernodes(T_from, T_to)
    m1 = m0 = 0
    for k in range(T_to.K):
        for l in range(k + 1, T_to.K):
            present = (k, l) in edges_to
            if k in matched and l in matched:
                a, b = sorted((matched[k], matched[l]))
                if ((a, b) in edges_from) != present:
                    raise UnreachableProposal("copied superedges differ")
            elif present:
                m1 += 1
            else:
                m0 += 1
    return m1 * math.log(xi_q) + m0 * math.log1p(-xi_q)


def propose_graph(T_from, edges_from, T_to, xi_q, rng):
    matched = match_supernodes(T_from, T_to)
    edges = set()
    for k in range(T_to.K):
        for l in range(k + 1, T_to.K):
            if k in matched and l in matched:
                if tuple(sorted((matched[k], matched[l]))) in edges_from:
                    edges.add((k, l))
            elif rng.random() < xi_q:
                edges.add((k, l))
    return frozenset(edges)


def log_proposal_bdm(from_state, to_state, move_kind, hp):
    """log q(to | from) for a birth, death or move proposal."""
    p = len(from_state.T.assignment)
    expected = {"birth": 1, "death": -1, "move": 0}[move_kind]
    if to_state.K - from_state.K != expected:
        raise UnreachableProposal(f"not a {move_kind} proposal")
    return log_q_centers(from_state.centers, to_state.centers, p) + log_q_graph(
        from_state.T, from_state.edges, to_state.T, to_state.edges, hp.xi_q
    )


def propose_centers(centers, p, kind, rng):
    """Return (kind, new centers) with kind in birth/death/move."""
    C = list(centers)
    if kind == "bd":
        kind = "birth" if rng.random() < _birth_prob(len(C), p) else "death"
    if kind == "birth":
        outside = [i for i in range(p) if i not in set(C)]
        C.append(outside[int(rng.integers(len(outside)))])
    elif kind == "death":
        C.pop(int(rng.integers(len(C))))
    else:
        outside = [i for i in range(p) if i not in set(C)]
        i = int(rng.integers(len(C)))
        C[i] = outside[int(rng.integers(len(outside)))]
    return kind, tuple(sorted(C))


def _accept(log_ratio, rng):
    return log_ratio >= 0 or rng.random() < math.exp(log_ratio)


def _tessellation_move(ev, state, kind, rng):
    p, hp = ev.p, ev.hp
    kind, C_new = propose_centers(state.centers, p, kind, rng)
    T_new = ev.tessellation(C_new)
    edges_new = propose_graph(state.T, state.edges, T_new, hp.xi_q, rng)
    try:
        new = make_state(ev, C_new, edges_new)
    except (GoGError, np.linalg.LinAlgError, FloatingPointError) as exc:
        log.warning("rejecting %s proposal after failed evaluation: %s", kind, exc)
        return state
    log_fwd = log_q_centers(state.centers, C_new, p) + log_q_graph(
        state.T, state.edges, T_new, edges_new, hp.xi_q
    )
    log_rev = log_q_centers(C_new, state.centers, p) + log_q_graph(
        T_new, edges_new, state.T, state.edges, hp.xi_q
    )
    log_ratio = new.log_target(hp.zeta) - state.log_target(hp.zeta) + log_rev - log_fwd
    return new if _accept(log_ratio, rng) else state


def _supergraph_move(ev, state, rng):
    if state.K < 2:
        return state
    lower = ev.log_lik_lower(state.T)
    chain = GraphChainState(ev.posterior(state.T), state.edges, state.log_lik - lower)
    graph_flip_step(chain, ev.hp.xi_se, rng, ev.hp.zeta)
    if not chain.accepted:
        return state
    return ChainState(
        state.centers, state.T, chain.edges, state.log_prior,
        ev.log_graph_prior(state.T, chain.edges), chain.log_lik + lower,
    )


def joint_step(ev, state, rng, debug=False):
    """
    One sweep of the joint sampler: birth/death, supergraph flip, move
    (when K < p), supergraph flip.
    """
    state = _tessellation_move(ev, state, "bd", rng)
    state = _supergraph_move(ev, state, rng)
    if state.K < ev.p:
        state = _tessellation_move(ev, state, "move", rng)
    state = _supergraph_move(ev, state, rng)
    if debug:
        check_state(ev, state)
    return state


def check_state(ev, state, tol=1e-8):
    fresh = make_state(ev.__class__(ev.X, ev.hp), state.centers, state.edges)
    for name in ("log_prior", "log_graph_prior", "log_lik"):
        a, b = getattr(state, name), getattr(fresh, name)
        if abs(a - b) > tol * max(1.0, abs(b)):
            raise AssertionError(f"cached {name} {a} differs from recomputed {b}")


def outer_step(ev, centers, rng):
    """Birth/death then move step targeting the coarsened tessellation prior."""
    p = ev.p
    centers = tuple(sorted(centers))
    for kind in ("bd", "move"):
        if kind == "move" and len(centers) == p:
            break
        kind, C_new = propose_centers(centers, p, kind, rng)
        try:
            log_ratio = ev.log_prior(ev.tessellation(C_new)) - ev.log_prior(ev.tessellation(centers))
        except (GoGError, np.linalg.LinAlgError) as exc:
            log.warning("rejecting %s proposal after failed evaluation: %s", kind, exc)
            continue
        log_ratio += log_q_centers(C_new, centers, p) - log_q_centers(centers, C_new, p)
        if _accept(log_ratio, rng):
            centers = C_new
    return centers


def _evaluator(X, hp):
    return X if isinstance(X, Evaluator) else Evaluator(X, hp)


def run_coarsened(X, hp, schedule, seed, init_centers=(0,), debug=False, progress=None):
    """Joint coarsened-likelihood sampler; returns the retained SampleRecords."""
    ev = _evaluator(X, hp)
    rng = np.random.default_rng(seed)
    state = make_state(ev, init_centers)
    records = []
    for it in range(schedule.iters):
        state = joint_step(ev, state, rng, debug)
        if schedule.records(it):
            records.append(state.record(it, hp.zeta))
        if progress is not None:
            progress(it, state)
    return records


def _inner_chain(X, hp, centers, n_inner, seed):
    ev = Evaluator(X, hp)
    T = ev.tessellation(centers)
    rng = np.random.default_rng(seed)
    _, chain = run_graph_chain(ev.posterior(T), n_inner, hp.xi_se, rng)
    edges = chain.edges
    lik = chain.log_lik + ev.log_lik_lower(T)
    state = ChainState(T.centers, T, edges, ev.log_prior(T), ev.log_graph_prior(T, edges), lik)
    return state


def _inner_batch(args):
    X, hp, jobs = args
    out = []
    for s, it, centers, n_inner, seed in jobs:
        state = _inner_chain(X, hp, centers, n_inner, seed)
        out.append((s, state.record(it, 1.0)))
    return out


def chain_seed(master, s):
    """Independent seed for inner chain s, derived by hashing (master, s)."""
    return np.random.SeedSequence([int(master), 1, int(s)])


def run_nested(X, hp, outer_schedule, n_inner, seed, parallelism=1, init_centers=(0,)):
    """
    Nested sampler for the cut distribution.

    Stage 1 runs the outer chain on the centers; stage 2 runs, for each
    retained tessellation, `n_inner` supergraph flips from the empty graph
    and keeps the final graph.  Output does not depend on `parallelism`.
    """
    if n_inner < 1:
        raise ConfigError("n_inner must be at least 1")
    ev = _evaluator(X, hp)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0]))
    centers = tuple(sorted(init_centers))
    kept = []
    for it in range(outer_schedule.iters):
        centers = outer_step(ev, centers, rng)
        if outer_schedule.records(it):
            kept.append((it, centers))
    jobs = [
        (s, it, c, n_inner, chain_seed(seed, s)) for s, (it, c) in enumerate(kept)
    ]
    if parallelism <= 1 or len(jobs) < 2:
        results = _inner_batch((ev.X, hp, jobs))
    else:
        chunks = [jobs[i::parallelism] for i in range(parallelism)]
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            results = [r for part in pool.map(_inner_batch, [(ev.X, hp, c) for c in chunks]) for r in part]
    results.sort(key=lambda r: r[0])
    return [rec for _, rec in results]


def run_supergraph(X, labels, hp, schedule, seed, zeta=1.0):
    """
    Supergraph-only sampler with the tessellation fixed to `labels`.

    Returns SampleRecords whose centers are the smallest node of each block.
    """
    ev = _evaluator(X, hp)
    T = tessellation_from_labels(labels)
    rng = np.random.default_rng(seed)
    chain = GraphChainState(ev.posterior(T))
    lower = ev.log_lik_lower(T)
    log_prior = ev.log_prior(T)
    records = []
    for it in range(schedule.iters):
        graph_flip_step(chain, hp.xi_se, rng, zeta)
        if schedule.records(it):
            state = ChainState(
                T.centers, T, chain.edges, log_prior,
                ev.log_graph_prior(T, chain.edges), chain.log_lik + lower,
            )
            records.append(state.record(it, zeta))
    return records


def write_samples(path, records):
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(rec.to_json() + "\n")


def read_samples(path):
    from .errors import ParseError

    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                records.append(SampleRecord.from_json(line))
            except (ValueError, KeyError, TypeError) as exc:
                raise ParseError(f"{path}:{lineno}: {exc}") from None
    if not records:
        raise ParseError(f"{path}: no samples")
    return records


__all__ = [
    "ChainState", "HyperParams", "SampleRecord", "Schedule", "joint_step",
    "log_proposal_bdm", "make_state", "outer_step", "run_coarsened",
    "run_nested", "run_supergraph", "read_samples", "write_samples",
]
