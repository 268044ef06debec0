"""Corrupt-restore-evaluate runs described by a JSON manifest.

Example manifest::

    {
      "input": "clean.rvol",
      "artifact": "spike:1,0.5",
      "noise": "gaussian:0.10",
      "denoiser": "gauss",
      "corrector": "spike-notch",
      "delta_lr": 0.5, "max_iters": 4, "stop_threshold": 0.028, "pre_check": true,
      "seed": 3,
      "outputs": {"corrupted": "y.rvol", "restored": "x.rvol", "report": "run.json"}
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .corruption import corrupt, specs_from_text
from .engine import JdacConfig, jdac_run
from .errors import ManifestError
from .io import read_volume, write_rvol
from .metrics import gradient_metrics, image_metrics
from .operators import make_corrector, make_denoiser

OUTPUT_KEYS = ("corrupted", "restored", "report", "figure")


@dataclass(frozen=True)
class PipelineManifest:
    input: str
    artifact: str = "none"
    noise: str = "none"
    denoiser: str = "gauss"
    corrector: str = "identity"
    delta_lr: float = 0.5
    max_iters: int = 4
    stop_threshold: float = 0.028
    pre_check: bool = True
    seed: int = 0
    outputs: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ManifestError("manifest must be a JSON object")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ManifestError(f"unknown manifest keys: {', '.join(unknown)}")
        if "input" not in d:
            raise ManifestError("manifest needs an 'input' path")
        outputs = d.get("outputs", {})
        if not isinstance(outputs, dict):
            raise ManifestError("'outputs' must be an object")
        bad = sorted(set(outputs) - set(OUTPUT_KEYS))
        if bad:
            raise ManifestError(f"unknown output keys: {', '.join(bad)}")
        m = cls(**d)
        try:
            m.config()
            specs_from_text(m.artifact, m.noise, m.seed)
        except ValueError as exc:
            raise ManifestError(str(exc)) from exc
        return m

    @classmethod
    def load(cls, path):
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise ManifestError(f"{path}: {exc}") from exc

    def config(self):
        return JdacConfig(delta_lr=self.delta_lr, max_iters=self.max_iters,
                          stop_threshold=self.stop_threshold, pre_check=self.pre_check)


def run_pipeline(m: PipelineManifest) -> dict:
    """Corrupt the clean input, restore it and score both against the input."""
    clean = read_volume(m.input)
    artifact, noise = specs_from_text(m.artifact, m.noise, m.seed)
    y = corrupt(clean, artifact, noise)
    report = jdac_run(y, make_denoiser(m.denoiser), make_corrector(m.corrector), m.config())
    out = m.outputs
    if out.get("corrupted"):
        write_rvol(y, out["corrupted"])
    if out.get("restored"):
        write_rvol(report.output, out["restored"])
    summary = {
        "run": report.to_dict(out.get("restored")),
        "corrupted": {"image": image_metrics(y, clean).to_dict(),
                      "gradient": gradient_metrics(y, clean).to_dict()},
        "restored": {"image": image_metrics(report.output, clean).to_dict(),
                     "gradient": gradient_metrics(report.output, clean).to_dict()},
    }
    if out.get("report"):
        Path(out["report"]).write_text(json.dumps(summary, indent=2))
    if out.get("figure"):
        from .plotting import plot_restoration

        plot_restoration(y, report.output, report, out["figure"])
    return summary
