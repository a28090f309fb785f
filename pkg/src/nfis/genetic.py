"""Genetic-algorithm wrapper feature selection (GEN-NMR, GEN-NTSK).

A chromosome is a binary attribute mask. Fitness is the validation error
of the base fuzzy model trained on the masked attributes; lower is better.
Validation uses the chronological tail of the data handed to :func:`run_ga`
(normally the training split), so the test split never drives selection.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .dataset import holdout_tail
from .metrics import nrmse, rmse
from .models import BASE_KINDS, fit_base

VALIDATION_FRACTION = 0.25


@dataclass
class GaConfig:
    population_size: int = 20
    generations: int = 30
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None -> 1/p
    elitism_count: int = 2
    seed: int = 0
    fitness_metric: str = "RMSE"
    early_stop: int | None = None

    def __post_init__(self):
        if self.population_size < 2:
            raise ValueError("population_size must be >= 2")
        if self.generations < 0:
            raise ValueError("generations must be >= 0")
        if not 0 <= self.elitism_count < self.population_size:
            raise ValueError("elitism_count must lie in [0, population_size)")
        for name in ("crossover_rate", "mutation_rate"):
            rate = getattr(self, name)
            if rate is not None and not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.fitness_metric not in ("RMSE", "NRMSE"):
            raise ValueError("fitness_metric must be RMSE or NRMSE")
        if self.early_stop is not None and self.early_stop < 1:
            raise ValueError("early_stop must be >= 1")


@dataclass
class Chromosome:
    mask: np.ndarray
    fitness: float = math.nan

    @property
    def key(self) -> str:
        return "".join("1" if b else "0" for b in self.mask)


@dataclass
class GenerationStats:
    generation: int
    best_fitness: float
    mean_fitness: float
    best_mask: str


@dataclass
class GaResult:
    best: Chromosome
    model: object
    history: list[GenerationStats] = field(default_factory=list)
    evaluations: int = 0


def repair(mask, rng):
    """Return ``mask`` unchanged unless it is all zero, then set one random bit."""
    mask = np.asarray(mask, dtype=bool).copy()
    if not mask.any():
        mask[rng.integers(mask.size)] = True
    return mask


def evaluate_fitness(mask, model_kind, train, val, params=None, metric="RMSE") -> float:
    """Validation error of ``model_kind`` fitted on the masked attributes.

    Any failure while fitting or predicting is scored as ``inf``.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise ValueError("mask selects no attribute")
    try:
        model = fit_base(model_kind, train.X, train.y, params, feature_mask=mask)
        pred = model.predict(val.X)
        if not np.isfinite(pred).all():
            return math.inf
        score = rmse(val.y, pred) if metric == "RMSE" else nrmse(val.y, pred)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError):
        return math.inf
    return score if math.isfinite(score) else math.inf


def _tournament(pop, rng):
    a, b = rng.choice(len(pop), size=2, replace=False)
    return pop[a] if pop[a].fitness <= pop[b].fitness else pop[b]


def run_ga(model_kind, ds, cfg=None, params=None) -> GaResult:
    """Evolve attribute masks for ``model_kind`` on ``ds``.

    The returned model is refitted on all of ``ds`` with the best mask seen
    during the run.
    """
    if model_kind not in BASE_KINDS:
        raise ValueError(f"unknown model kind {model_kind!r}")
    cfg = cfg or GaConfig()
    rng = np.random.default_rng(cfg.seed)
    train, val = holdout_tail(ds, VALIDATION_FRACTION)
    p = ds.n_features
    mutation_rate = cfg.mutation_rate if cfg.mutation_rate is not None else 1.0 / p

    # Fitness is a pure function of the mask, so repeated masks are looked up.
    cache: dict[str, float] = {}

    def evaluate(chrom):
        if chrom.key not in cache:
            cache[chrom.key] = evaluate_fitness(chrom.mask, model_kind, train, val, params, cfg.fitness_metric)
        chrom.fitness = cache[chrom.key]
        return chrom

    def ranked(pop):
        return sorted(pop, key=lambda c: c.fitness)  # stable: ties keep population order

    pop = [evaluate(Chromosome(repair(rng.random(p) < 0.5, rng))) for _ in range(cfg.population_size)]
    best = ranked(pop)[0]
    best = Chromosome(best.mask.copy(), best.fitness)
    history = [_stats(0, pop)]
    stagnant = 0

    for gen in range(1, cfg.generations + 1):
        elite = [Chromosome(c.mask.copy(), c.fitness) for c in ranked(pop)[:cfg.elitism_count]]
        children = []
        while len(elite) + len(children) < cfg.population_size:
            a, b = _tournament(pop, rng), _tournament(pop, rng)
            if rng.random() < cfg.crossover_rate:
                take_a = rng.random(p) < 0.5
                child = np.where(take_a, a.mask, b.mask)
            else:
                child = a.mask.copy()
            child = child ^ (rng.random(p) < mutation_rate)
            children.append(evaluate(Chromosome(repair(child, rng))))
        pop = elite + children

        gen_best = ranked(pop)[0]
        if gen_best.fitness < best.fitness:
            best = Chromosome(gen_best.mask.copy(), gen_best.fitness)
            stagnant = 0
        else:
            stagnant += 1
        history.append(_stats(gen, pop))
        if cfg.early_stop is not None and stagnant >= cfg.early_stop:
            break

    model = fit_base(model_kind, ds.X, ds.y, params, feature_mask=best.mask,
                     attribute_names=ds.attribute_names, target_name=ds.target_name)
    return GaResult(best, model, history, len(cache))


def _stats(gen, pop):
    fits = np.array([c.fitness for c in pop])
    top = min(pop, key=lambda c: c.fitness)
    return GenerationStats(gen, float(top.fitness), float(fits.mean()), top.key)


def write_history_csv(history, path):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["generation", "best_fitness", "mean_fitness", "best_mask"])
        for h in history:
            writer.writerow([h.generation, repr(h.best_fitness), repr(h.mean_fitness), h.best_mask])
