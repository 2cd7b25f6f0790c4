"""Bundled example data.

The invariance demo dataset is a 5 + 5 observation, 20-variable gene-set
expression example. It is committed as CSV with pinned checksums so the
demo runs offline and any accidental edit is caught at load time.
"""

from __future__ import annotations

import hashlib
from importlib import resources

from .core import TwoSampleProblem
from .io import parse_matrix_text

_CHECKSUMS = {
    "invariance_x.csv": "e22bf376bf275651ef2e273ad932e5195188b57b9e71ed27738a83cbb744fb7a",
    "invariance_y.csv": "c208275570d366fffe3fa16539bce34a38e2ebcc2c19066228e56e9cf283efbd",
}


def _load(name: str):
    text = resources.files("hdmean.data").joinpath(name).read_text(encoding="utf-8")
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    if digest != _CHECKSUMS[name]:
        raise RuntimeError(f"bundled dataset {name} is corrupted (sha256 {digest})")
    return parse_matrix_text(text)


def invariance_problem() -> TwoSampleProblem:
    """The 20-dimensional, n_x = n_y = 5 dataset used by the invariance demo."""
    return TwoSampleProblem(_load("invariance_x.csv"), _load("invariance_y.csv"))
