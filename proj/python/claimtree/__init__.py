"""Recursive claim verification trees and benchmark tooling."""

import json as _json

from ._claimtree import (
    ClaimtreeError,
    applicable_operators,
    consolidate_states,
    f1_at_k,
    falsify,
    precision,
    recall_at_k,
    scale_numeral,
    table_row_means,
    token_f1,
)
from . import _claimtree

__all__ = [
    "ClaimtreeError",
    "Session",
    "applicable_operators",
    "consolidate_states",
    "dataset_stats",
    "evaluate",
    "f1_at_k",
    "falsify",
    "precision",
    "recall_at_k",
    "scale_numeral",
    "table_row_means",
    "token_f1",
]


class Session:
    """A loaded run configuration."""

    def __init__(self, config, deterministic=False, jobs=None):
        self._impl = _claimtree.Session(str(config), deterministic, jobs)

    def config(self):
        return _json.loads(self._impl.config())

    def extract(self, passage, strategy=""):
        """Atomic claims of `passage`, in source order."""
        return _json.loads(self._impl.extract(passage, strategy))

    def verify(self, query, claims=None, sample_id="", category="", out=None):
        """Verify `query` and return its report; `out` also persists the run."""
        report = self._impl.verify(query, claims, sample_id, category, None if out is None else str(out))
        return _json.loads(report)


def dataset_stats(records):
    return _json.loads(_claimtree.dataset_stats(str(records)))


def evaluate(gold, reports, mode="fixed", ks=(5, 10)):
    """Metrics of verification reports (dicts) against gold labels."""
    payload = [_json.dumps(r) for r in reports]
    return _json.loads(_claimtree.evaluate(str(gold), payload, mode, list(ks)))
