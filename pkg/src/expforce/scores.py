from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NodeScores:
    """One metric value per node, indexed by dense node id."""

    metric: str
    values: np.ndarray

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, v):
        return self.values[v]

    def to_csv(self, g, stream, header: str = "node,score") -> None:
        stream.write(header + "\n")
        integral = np.issubdtype(self.values.dtype, np.integer)
        for v, s in enumerate(self.values.tolist()):
            stream.write(f"{g.label(v)},{s if integral else repr(float(s))}\n")
