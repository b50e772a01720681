"""Coverage analysis and reference-set selection."""
from dataclasses import dataclass

import numpy as np

from ..errors import CoverageImpossible


@dataclass(frozen=True)
class Coverage:
    covered: tuple      # per type, frozenset of ComponentLabel
    missing: frozenset  # required labels not covered

    @property
    def is_complete(self):
        return not self.missing

    def all_labels(self):
        return frozenset().union(*self.covered)


def coverage(schema, chars):
    covered = [set() for _ in range(schema.num_types)]
    for c in chars:
        for label in schema.decompose(c):
            covered[label.type_index].add(label)
    covered = tuple(frozenset(s) for s in covered)
    missing = schema.required_labels() - frozenset().union(*covered)
    return Coverage(covered, frozenset(missing))


def minimal_reference_set(schema, available, seed=None, required=None):
    """Pick a small random set of characters covering every required label.

    Greedy set cover with random tie breaking: each round keeps the
    characters that add the most not-yet-covered labels and draws one of
    them uniformly.  ``required`` defaults to every non-null label of the
    schema; a corpus that only uses part of the script can pass its own.
    """
    rng = np.random.default_rng(seed)
    pool = sorted(set(available))
    required = schema.required_labels() if required is None else frozenset(required)
    decomposed = [frozenset(l for l in schema.decompose(c) if l in required) for c in pool]

    reachable = frozenset().union(*decomposed) if decomposed else frozenset()
    if reachable != required:
        uncovered = sorted(required - reachable)
        shown = ", ".join(f"{schema.name(l)}{tuple(l)}" for l in uncovered[:10])
        more = "" if len(uncovered) <= 10 else f" and {len(uncovered) - 10} more"
        raise CoverageImpossible(f"available characters cannot cover: {shown}{more}", uncovered)

    flat = np.array([[schema.flat_index(l) for l in labels] + [-1] * (schema.num_types - len(labels))
                     for labels in decomposed], dtype=np.int64)
    uncovered = np.zeros(schema.num_components + 1, dtype=bool)  # last slot pads short rows
    for l in required:
        uncovered[schema.flat_index(l)] = True
    chosen = []
    while uncovered.any():
        gain = uncovered[flat].sum(axis=1)
        best = np.flatnonzero(gain == gain.max())
        pick = int(rng.choice(best))
        chosen.append(pool[pick])
        uncovered[flat[pick]] = False
        uncovered[-1] = False
    return chosen
