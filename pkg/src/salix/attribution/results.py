"""Result containers shared by the attribution methods."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..metrics import average_ranks

METHODS = ("rfe", "shap", "gsa-s1", "gsa-st")


@dataclass(frozen=True)
class AttributionResult:
    """Per-feature scores from one method; rank 1 is the most important."""

    method: str
    features: tuple
    scores: np.ndarray
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        s = np.asarray(self.scores, dtype=float)
        if s.shape != (len(self.features),):
            raise ValueError("one score per feature required")
        if not np.all(np.isfinite(s)):
            raise ValueError(f"{self.method}: non-finite scores")
        s.setflags(write=False)
        object.__setattr__(self, "scores", s)

    @property
    def ranks(self) -> np.ndarray:
        return average_ranks(-self.scores)

    def top(self, k):
        order = np.argsort(-self.scores, kind="stable")
        return [self.features[i] for i in order[:k]]

    def as_dict(self):
        return dict(zip(self.features, self.scores.tolist()))

    def to_dict(self):
        return {"method": self.method, "features": list(self.features),
                "scores": self.scores.tolist(), "ranks": self.ranks.tolist(),
                "metadata": self.metadata}

    def to_csv(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# method={self.method}\n")
            fh.write("feature,score,rank\n")
            for f, s, r in zip(self.features, self.scores, self.ranks):
                fh.write(f"{f},{float(s)!r},{float(r)!r}\n")

    @classmethod
    def from_csv(cls, path):
        method = None
        feats, scores = [], []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line.startswith("# method="):
                    method = line.split("=", 1)[1]
                elif line and not line.startswith("feature,"):
                    f, s, _ = line.rsplit(",", 2)
                    feats.append(f)
                    scores.append(float(s))
        return cls(method or "unknown", feats, scores)
