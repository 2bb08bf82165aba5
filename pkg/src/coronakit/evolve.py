"""Genetic-programming search over expression graphs.

retain-then-vary loop: the best half of each scored generation survives
unmodified, the other half is refreshed (fresh template draws, survivor
crossover, mutation) and rescored.  All randomness flows from
per-generation streams derived from the run seed, and scoring is
rng-free, so results are identical in serial and parallel modes.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, asdict
from functools import partial

import numpy as np

from . import exprgraph, objective
from .data import Dataset
from .errors import EmptyDatasetError

INF = float("inf")


@dataclass
class GPConfig:
    population_size: int = 500
    generations: int = 200
    max_terms: int = 4
    lambda_mono: float = 0.01
    mutation_rates: tuple[float, float, float] = (0.4, 0.3, 0.3)
    mutation_prob: float = 0.7
    crossover_prob: float = 0.7
    exponent_alphabet: tuple[int, ...] = exprgraph.DEFAULT_ALPHABET
    template_weights: tuple[float, float, float, float] = (0.35, 0.25, 0.25, 0.15)
    crossover_terms: int = 1
    dedup: bool = False
    seed: int = 0

    def validate(self) -> None:
        if self.population_size < 2 or self.population_size % 2:
            raise ValueError("population_size must be even and >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if self.lambda_mono <= 0:
            raise ValueError("lambda_mono must be positive")
        rates = self.mutation_rates
        if len(rates) != 3 or any(r < 0 for r in rates) \
                or abs(sum(rates) - 1.0) > 1e-9:
            raise ValueError("mutation_rates must be 3 nonnegative values summing to 1")
        if not self.exponent_alphabet or 0 in self.exponent_alphabet:
            raise ValueError("exponent alphabet must be non-empty and exclude 0")
        if len(self.template_weights) != 4 or any(w < 0 for w in self.template_weights) \
                or sum(self.template_weights) <= 0:
            raise ValueError("template_weights must be 4 nonnegative values")
        if not 0 <= self.mutation_prob <= 1 or not 0 <= self.crossover_prob <= 1:
            raise ValueError("probabilities must lie in [0, 1]")
        if self.crossover_terms < 1:
            raise ValueError("crossover_terms must be >= 1")

    def to_dict(self) -> dict:
        out = asdict(self)
        out["mutation_rates"] = list(self.mutation_rates)
        out["exponent_alphabet"] = list(self.exponent_alphabet)
        out["template_weights"] = list(self.template_weights)
        return out


@dataclass
class Individual:
    graph: exprgraph.ExprGraph
    loss: objective.LossBreakdown | None = None

    @property
    def scored(self) -> bool:
        return self.loss is not None


# ---------------------------------------------------------------------------
# population operators
# ---------------------------------------------------------------------------

def sample_term(config: GPConfig, variables, rng) -> exprgraph.TermFragment:
    weights = np.asarray(config.template_weights, dtype=float)
    weights = weights / weights.sum()
    kind = exprgraph.TEMPLATE_KINDS[int(rng.choice(4, p=weights))]
    return exprgraph.sample_template(kind, variables, rng,
                                     alphabet=config.exponent_alphabet)


def random_graph(config: GPConfig, variables, rng) -> exprgraph.ExprGraph:
    n_terms = int(rng.integers(1, config.max_terms + 1))
    terms = [(sample_term(config, variables, rng), 1.0) for _ in range(n_terms)]
    return exprgraph.from_terms(terms)


def init_population(config: GPConfig, variables, rng) -> list[Individual]:
    """population_size fresh template-drawn individuals, 1..max_terms terms."""
    return [Individual(random_graph(config, variables, rng))
            for _ in range(config.population_size)]


def crossover(a: exprgraph.ExprGraph, b: exprgraph.ExprGraph, rng,
              n_swap: int = 1) -> tuple[exprgraph.ExprGraph, exprgraph.ExprGraph]:
    """Swap root-level terms one-for-one; term counts are preserved.

    Structurally identical parents swap matching positions, so their
    crossover is an identity operation.
    """
    terms_a = exprgraph.graph_terms(a)
    terms_b = exprgraph.graph_terms(b)
    k = min(n_swap, len(terms_a), len(terms_b))
    idx_a = rng.choice(len(terms_a), size=k, replace=False)
    idx_b = rng.choice(len(terms_b), size=k, replace=False)
    if exprgraph.render(a) == exprgraph.render(b):
        idx_b = idx_a
    for i, j in zip(idx_a, idx_b):
        terms_a[int(i)], terms_b[int(j)] = terms_b[int(j)], terms_a[int(i)]
    return exprgraph.from_terms(terms_a), exprgraph.from_terms(terms_b)


def _mutable_edges(graph: exprgraph.ExprGraph) -> list[exprgraph.Edge]:
    """Inner features the edge mutation may touch: exponents, log bases and
    inner additive signs.  Root coefficients are fitted, never mutated."""
    out = []
    for e in graph.edges:
        child = graph.node(e.child)
        if child.kind in (exprgraph.POW, exprgraph.LOG):
            out.append(e)
        elif graph.node(e.parent).kind == exprgraph.ADD and e.parent != graph.root:
            out.append(e)
    return out


def _with_edge_feature(graph: exprgraph.ExprGraph, target: exprgraph.Edge,
                       feature: float) -> exprgraph.ExprGraph:
    edges = [exprgraph.Edge(e.parent, e.child, feature) if e is target else e
             for e in graph.edges]
    return exprgraph.ExprGraph(graph.nodes, edges, graph.root)


def mutate(graph: exprgraph.ExprGraph, config: GPConfig, variables,
           rng) -> exprgraph.ExprGraph:
    """Apply exactly one mutation kind drawn from the configured rates."""
    rates = np.asarray(config.mutation_rates, dtype=float)
    kind = int(rng.choice(3, p=rates))

    if kind == 0:  # edge feature
        candidates = _mutable_edges(graph)
        if not candidates:
            kind = 1  # nothing to perturb (e.g. lone constant term)
        else:
            e = candidates[int(rng.integers(len(candidates)))]
            child = graph.node(e.child)
            if child.kind == exprgraph.POW:
                alphabet = config.exponent_alphabet
                feature = float(alphabet[int(rng.integers(len(alphabet)))])
            elif child.kind == exprgraph.LOG:
                feature = exprgraph.LOG_BASES[1] \
                    if abs(e.feature - 10.0) < 1e-9 else exprgraph.LOG_BASES[0]
            else:
                feature = -e.feature
            return _with_edge_feature(graph, e, feature)

    if kind == 1:  # replace one term with a fresh template instance
        index = int(rng.integers(graph.term_count))
        return exprgraph.replace_term(graph, index,
                                      sample_term(config, variables, rng))

    # add/remove a term; infeasible direction falls back to the other
    add = bool(rng.random() < 0.5)
    if add and graph.term_count >= config.max_terms:
        add = False
    elif not add and graph.term_count <= 1:
        add = True
    if add:
        return exprgraph.add_term(graph, sample_term(config, variables, rng))
    index = int(rng.integers(graph.term_count))
    return exprgraph.remove_term(graph, index)


def _rank_key(individual: Individual):
    total = individual.loss.total if individual.loss is not None else INF
    return (total, individual.graph.node_count)


def rank(population: list[Individual]) -> list[Individual]:
    """Stable ascending sort: total loss, then node count, then insertion order."""
    return sorted(population, key=_rank_key)


def select(scored: list[Individual], config: GPConfig, variables,
           rng) -> list[Individual]:
    """Keep the best half, refill to population size with fresh randoms."""
    survivors = rank(scored)[:config.population_size // 2]
    refill = [Individual(random_graph(config, variables, rng))
              for _ in range(config.population_size - len(survivors))]
    return survivors + refill


# ---------------------------------------------------------------------------
# scoring
# ---------------------------------------------------------------------------

def _score_graph(graph, data, specs, lambda_mono):
    return objective.score_candidate(graph, data, specs, lambda_mono)


def _score_population(population, data, specs, config: GPConfig,
                      workers: int) -> None:
    """Fit and score every unscored individual, in place.

    Scoring is a pure function of (graph, data, specs), so the parallel
    path only maps it over the same ordered list seen by the serial path.
    """
    todo = [ind for ind in population if not ind.scored]
    if not todo:
        return
    task = partial(_score_graph, data=data, specs=specs,
                   lambda_mono=config.lambda_mono)
    if workers > 1:
        chunk = max(1, len(todo) // (4 * workers))
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(task, [ind.graph for ind in todo],
                                    chunksize=chunk))
    else:
        results = [task(ind.graph) for ind in todo]
    for ind, (fitted, breakdown) in zip(todo, results):
        ind.graph = fitted
        ind.loss = breakdown
    if config.dedup:
        seen = set()
        for ind in rank(population):
            key = exprgraph.render(ind.graph)
            if key in seen:
                ind.loss = objective.LossBreakdown.rejected()
            else:
                seen.add(key)


# ---------------------------------------------------------------------------
# run report
# ---------------------------------------------------------------------------

def _json_num(value: float):
    return value if math.isfinite(value) else None


@dataclass
class RunReport:
    config: dict
    seed: int
    equations: list[dict]
    trace: list[list[float]]
    predictions: list[float] = field(default_factory=list)

    @property
    def best(self) -> dict:
        return self.equations[0]

    def best_graph(self) -> exprgraph.ExprGraph:
        return exprgraph.ExprGraph.from_dict(self.best["graph"])

    def to_json(self) -> str:
        payload = {
            "config": self.config,
            "seed": self.seed,
            "equations": self.equations,
            "trace": [[_json_num(v) for v in row] for row in self.trace],
            "predictions": self.predictions,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        payload = json.loads(text)
        trace = [[INF if v is None else v for v in row]
                 for row in payload["trace"]]
        return cls(config=payload["config"], seed=payload["seed"],
                   equations=payload["equations"], trace=trace,
                   predictions=payload.get("predictions", []))

    def leaderboard(self) -> str:
        lines = [f"{'rank':>4}  {'total':>12}  {'r2':>10}  {'terms':>5}  expression"]
        for entry in self.equations:
            total = entry["total"]
            r2 = entry["r2"]
            lines.append(
                f"{entry['rank']:>4}  "
                f"{'inf' if total is None else format(total, '.6g'):>12}  "
                f"{'-' if r2 is None else format(r2, '.6f'):>10}  "
                f"{entry['terms']:>5}  {entry['expression']}")
        return "\n".join(lines) + "\n"

    def trace_csv(self) -> str:
        lines = ["generation,rank1,rank2,rank3,rank4,rank5"]
        for g, row in enumerate(self.trace, start=1):
            cells = [str(g)] + [repr(v) for v in row]
            lines.append(",".join(cells))
        return "\n".join(lines) + "\n"


def _equation_entry(rank_no: int, ind: Individual) -> dict:
    loss = ind.loss
    return {
        "rank": rank_no,
        "expression": exprgraph.render(ind.graph),
        "terms": ind.graph.term_count,
        "r2": _json_num(loss.r2),
        "l_acc": _json_num(loss.l_acc),
        "l_mono": _json_num(loss.l_mono),
        "total": _json_num(loss.total),
        "graph": ind.graph.to_dict(),
    }


# ---------------------------------------------------------------------------
# the generation loop
# ---------------------------------------------------------------------------

def _next_generation(ranked: list[Individual], config: GPConfig, variables,
                     rng) -> list[Individual]:
    selected = select(ranked, config, variables, rng)
    half = config.population_size // 2
    survivors, refill = selected[:half], selected[half:]
    varied: list[Individual] = []
    pos = 0
    while pos < len(refill):
        pair = refill[pos:pos + 2]
        if rng.random() < config.crossover_prob and survivors:
            i = int(rng.integers(len(survivors)))
            j = int(rng.integers(len(survivors)))
            g1, g2 = crossover(survivors[i].graph, survivors[j].graph, rng,
                               n_swap=config.crossover_terms)
            offspring = [g1, g2][:len(pair)]
        else:
            offspring = [ind.graph for ind in pair]
        for g in offspring:
            if rng.random() < config.mutation_prob:
                g = mutate(g, config, variables, rng)
            varied.append(Individual(g))
        pos += 2
    return survivors + varied


def run_discovery(data: Dataset, specs, config: GPConfig,
                  workers: int = 1) -> RunReport:
    """Full search: init -> [score -> select -> vary] x generations.

    Deterministic for a fixed seed, independent of worker count; the
    returned report carries the ranked final equations, the per-generation
    top-5 loss trace and the best equation's training-set predictions.
    """
    config.validate()
    if data.n_rows == 0:
        raise EmptyDatasetError("empty dataset")
    for spec in specs:
        if spec.variable not in data.columns:
            raise ValueError(f"monotonicity variable {spec.variable!r} "
                             "not in dataset")
    variables = data.variables

    streams = np.random.SeedSequence(config.seed).spawn(config.generations + 1)
    rngs = [np.random.default_rng(s) for s in streams]

    population = init_population(config, variables, rngs[0])
    trace: list[list[float]] = []
    for gen in range(config.generations):
        _score_population(population, data, specs, config, workers)
        ranked = rank(population)
        top5 = [ind.loss.total for ind in ranked[:5]]
        top5 += [INF] * (5 - len(top5))
        trace.append(top5)
        if gen < config.generations - 1:
            population = _next_generation(ranked, config, variables,
                                          rngs[gen + 1])

    ranked = rank(population)
    equations = []
    seen = set()
    for ind in ranked:
        key = exprgraph.render(ind.graph)
        if key in seen:
            continue
        seen.add(key)
        equations.append(_equation_entry(len(equations) + 1, ind))
        if len(equations) >= 10:
            break

    best = ranked[0]
    predictions: list[float] = []
    if best.loss is not None and math.isfinite(best.loss.total):
        values, finite = exprgraph.evaluate_batch(best.graph, data)
        if finite.all():
            predictions = [float(v) for v in values]

    return RunReport(config=config.to_dict(), seed=config.seed,
                     equations=equations, trace=trace,
                     predictions=predictions)
