"""Beam training: angular sweep, hierarchical refinement, two-stage search.

Every scheme scores candidate codewords by the achievable rate of the
cascaded channel under the current precoder, keeps the best codeword seen
anywhere during the run, and counts every scored codeword exactly once.
Closed forms for the counts (with L layers, s_x*s_y samples per direction
pair and M RIS elements):

    angular sweep          m_x * m_y
    hierarchical           16 * L * (s_x*s_y)^2
    two-stage              M + 4 * L * s_x * s_y
    exhaustive baseline    size of the supplied codebook

Ties are broken toward the lowest codeword index, so reports are
deterministic functions of (channel, precoder, grids, budget).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .channel import ChannelRealization
from .codebook import (
    Codebook,
    Codeword,
    SamplingGrid,
    build_angular_component,
    build_distance_component,
    build_ff_codebook,
    star,
    subdivide_range,
)
from .geometry import SystemGeometry
from .optimizer import rates_for_phase_batch


@dataclass(frozen=True)
class TrainingBudget:
    """Layer count and per-layer sample counts for the refining schemes.

    max_layers = 0 is allowed and turns the two-stage scheme into a pure
    angular sweep; the hierarchical scheme requires at least one layer.
    """

    max_layers: int
    s_x: int = 2
    s_y: int = 2

    def __post_init__(self):
        if self.max_layers < 0:
            raise ValueError("max_layers must be >= 0")
        if self.s_x < 1 or self.s_y < 1:
            raise ValueError("sample counts must be positive")


@dataclass(frozen=True)
class LayerRecord:
    """One selection step: layer index, chosen indices, best rate so far
    in that layer, and the cumulative evaluation count."""

    layer: int
    choice: tuple
    best_rate: float
    evaluations_total: int


@dataclass
class TrainingReport:
    best_codeword: Codeword
    best_rate: float
    evaluations: int
    layer_trace: list[LayerRecord]

    def trace_to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["layer", "choice_i", "choice_j", "best_rate",
                             "evaluations"])
            for rec in self.layer_trace:
                i = rec.choice[0] if len(rec.choice) > 0 else ""
                j = rec.choice[1] if len(rec.choice) > 1 else ""
                writer.writerow([rec.layer, i, j, f"{rec.best_rate:.12g}",
                                 rec.evaluations_total])


def sweep_overhead(m_x: int, m_y: int) -> int:
    return m_x * m_y


def hierarchical_overhead(layers: int, s_x: int, s_y: int) -> int:
    return 16 * layers * (s_x * s_y) ** 2


def two_stage_overhead(m: int, layers: int, s_x: int, s_y: int) -> int:
    return m + 4 * layers * s_x * s_y


def es_overhead_nn(layers: int, s_x: int, s_y: int) -> int:
    """Flat-search cost quoted for the hierarchical scheme's accuracy."""
    return 4 ** (layers + 1) * (s_x * s_y) ** 2


def es_overhead_hybrid(m: int, layers: int, s_x: int, s_y: int) -> int:
    """Flat-search cost quoted for the two-stage scheme's accuracy."""
    return m * 4 * layers * s_x * s_y


def angular_sweep(realization: ChannelRealization, w: np.ndarray,
                  noise_var: float, geometry: SystemGeometry) -> TrainingReport:
    """Score every angular codeword; m_x*m_y evaluations."""
    book = build_ff_codebook(geometry)
    rates = rates_for_phase_batch(realization, book.words, w, noise_var)
    k = int(np.argmax(rates))
    tag = book.provenance[k]
    rec = LayerRecord(layer=0, choice=(tag.ix, tag.iy),
                      best_rate=float(rates[k]), evaluations_total=len(book))
    return TrainingReport(best_codeword=book[k], best_rate=float(rates[k]),
                          evaluations=len(book), layer_trace=[rec])


def hierarchical_nn(realization: ChannelRealization, w: np.ndarray,
                    noise_var: float, grid_bs: SamplingGrid,
                    grid_ue: SamplingGrid, budget: TrainingBudget,
                    geometry: SystemGeometry) -> TrainingReport:
    """Layered search over both sample ranges.

    Each layer quadrisects the current BS and user ranges, scores all 16
    sub-codebooks (4 BS quadrants x 4 user quadrants, (s_x*s_y)^2 words
    each), and descends into the winning quadrant pair.  Sample counts
    come from the budget; the grids supply the ranges and heights.
    """
    if budget.max_layers < 1:
        raise ValueError("hierarchical training requires max_layers >= 1")
    cur_bs = replace(grid_bs, s_x=budget.s_x, s_y=budget.s_y)
    cur_ue = replace(grid_ue, s_x=budget.s_x, s_y=budget.s_y)

    best_rate = -np.inf
    best_word: Codeword | None = None
    evaluations = 0
    trace: list[LayerRecord] = []

    for layer in range(1, budget.max_layers + 1):
        subs_bs = subdivide_range(cur_bs)
        subs_ue = subdivide_range(cur_ue)
        # each side's four sample lists are shared across the 16 pairings
        bs_lists = [build_distance_component(sub, "B", geometry)
                    for sub in subs_bs]
        ue_lists = [build_distance_component(sub, "U", geometry)
                    for sub in subs_ue]
        books = [star(ue_lists[j], bs_lists[i])
                 for i in range(4) for j in range(4)]
        words = np.vstack([b.words for b in books])
        rates = rates_for_phase_batch(realization, words, w, noise_var)
        evaluations += words.shape[0]
        k = int(np.argmax(rates))
        per_book = len(books[0])
        pair, s = divmod(k, per_book)
        i, j = divmod(pair, 4)
        layer_best = float(rates[k])
        trace.append(LayerRecord(layer=layer, choice=(i + 1, j + 1),
                                 best_rate=layer_best,
                                 evaluations_total=evaluations))
        if layer_best > best_rate:
            best_rate = layer_best
            best_word = books[pair][s]
        cur_bs, cur_ue = subs_bs[i], subs_ue[j]

    return TrainingReport(best_codeword=best_word, best_rate=best_rate,
                          evaluations=evaluations, layer_trace=trace)


def two_stage_hybrid(realization: ChannelRealization, w: np.ndarray,
                     noise_var: float, grid: SamplingGrid,
                     budget: TrainingBudget, side: str,
                     geometry: SystemGeometry) -> TrainingReport:
    """Angular sweep first, then layered distance refinement on one side.

    side "NF" refines the BS-side range, "FN" the user-side range; the
    winning angular codeword stays fixed throughout stage two, where each
    layer scores 4 quadrant sub-codebooks of s_x*s_y samples each.
    Total evaluations: M + 4 * max_layers * s_x * s_y.
    """
    if side not in ("NF", "FN"):
        raise ValueError(f"side must be 'NF' or 'FN', got {side!r}")
    angular = build_angular_component(geometry)
    rates = rates_for_phase_batch(realization, angular.words, w, noise_var)
    k1 = int(np.argmax(rates))
    evaluations = len(angular)
    tag = angular.provenance[k1]
    best_rate = float(rates[k1])
    best_word = angular[k1]
    trace = [LayerRecord(layer=0, choice=(tag.ix, tag.iy),
                         best_rate=best_rate, evaluations_total=evaluations)]

    fixed = Codebook(words=angular.words[k1:k1 + 1],
                     provenance=(angular.provenance[k1],))
    side_letter = "B" if side == "NF" else "U"
    cur = replace(grid, s_x=budget.s_x, s_y=budget.s_y)
    for layer in range(1, budget.max_layers + 1):
        subs = subdivide_range(cur)
        books = [star(fixed, build_distance_component(sub, side_letter, geometry))
                 for sub in subs]
        words = np.vstack([b.words for b in books])
        layer_rates = rates_for_phase_batch(realization, words, w, noise_var)
        evaluations += words.shape[0]
        k = int(np.argmax(layer_rates))
        i, s = divmod(k, len(books[0]))
        layer_best = float(layer_rates[k])
        trace.append(LayerRecord(layer=layer, choice=(i + 1,),
                                 best_rate=layer_best,
                                 evaluations_total=evaluations))
        if layer_best > best_rate:
            best_rate = layer_best
            best_word = books[i][s]
        cur = subs[i]

    return TrainingReport(best_codeword=best_word, best_rate=best_rate,
                          evaluations=evaluations, layer_trace=trace)


def exhaustive_search(realization: ChannelRealization, w: np.ndarray,
                      noise_var: float, codebook: Codebook) -> TrainingReport:
    """Flat scan of a prebuilt codebook; the baseline for everything else."""
    if len(codebook) == 0:
        raise ValueError("empty codebook")
    rates = rates_for_phase_batch(realization, codebook.words, w, noise_var)
    k = int(np.argmax(rates))
    rec = LayerRecord(layer=0, choice=(k,), best_rate=float(rates[k]),
                      evaluations_total=len(codebook))
    return TrainingReport(best_codeword=codebook[k], best_rate=float(rates[k]),
                          evaluations=len(codebook), layer_trace=[rec])
