"""Seeded random graphs and split scripts for property checks."""

from __future__ import annotations

import random

from .graph import Graph
from .moves import ScriptStep, SplitScript, iterated_balanced_in_split


def random_graph(rng: random.Random, n_vertices: int, max_out: int = 2, loops: bool = True) -> Graph:
    """Every vertex gets between 1 and ``max_out`` outgoing edges, so there are no sinks."""
    vs = [f"v{i}" for i in range(n_vertices)]
    edges = []
    for v in vs:
        for _ in range(rng.randint(1, max_out)):
            targets = vs if loops else [w for w in vs if w != v] or vs
            edges.append((f"e{len(edges)}", v, rng.choice(targets)))
    return Graph(vs, edges)


def random_cells(rng: random.Random, edges, n: int, allow_empty: bool = True) -> list[list[str]]:
    cells: list[list[str]] = [[] for _ in range(n)]
    for e in edges:
        cells[rng.randrange(n)].append(e)
    if not allow_empty:
        cells = [c for c in cells if c] or [[]]
    return cells


def random_script(rng: random.Random, base: Graph, steps: int, max_cells: int = 2) -> SplitScript:
    """A balanced in-split script of the given length on ``base``."""
    script = SplitScript(base)
    for _ in range(steps):
        E, F, _ = iterated_balanced_in_split(script)
        v = rng.choice(E.vertices)
        n = rng.randint(1, max_cells)
        step = ScriptStep(v, random_cells(rng, E.in_edges(v), n), random_cells(rng, F.in_edges(v), n))
        script = SplitScript(base, script.steps + (step,))
    return script
