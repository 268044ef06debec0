"""Run operators as external processes that exchange rvol files.

The command is invoked as ``command <in.rvol> <out.rvol>`` for correctors
and ``command <in.rvol> <out.rvol> <sigma_e>`` for denoisers. Denoisers also
get a sidecar ``<in.rvol>.json`` holding ``{"sigma_e": ...}``. A denoiser's
output file must contain its raw prediction (noise divided by variance),
not the denoised image.
"""

from __future__ import annotations

import json
import shlex
import subprocess
import tempfile
from pathlib import Path

from .errors import IoFailure, OperatorContractViolation, OperatorTimeout, ProcessFailed, RvolError
from .io import read_rvol, write_rvol
from .operators import Corrector, Denoiser

DEFAULT_TIMEOUT = 300.0


def _run(command, volume, sigma_e=None, timeout=DEFAULT_TIMEOUT):
    argv = shlex.split(command)
    if not argv:
        raise OperatorContractViolation("external operator command is empty")
    with tempfile.TemporaryDirectory(prefix="jdac-ext-") as tmp:
        src = Path(tmp) / "in.rvol"
        dst = Path(tmp) / "out.rvol"
        write_rvol(volume, src)
        args = argv + [str(src), str(dst)]
        if sigma_e is not None:
            (Path(tmp) / "in.rvol.json").write_text(json.dumps({"sigma_e": float(sigma_e)}))
            args.append(repr(float(sigma_e)))
        try:
            proc = subprocess.run(args, capture_output=True, text=True, timeout=timeout)
        except subprocess.TimeoutExpired as exc:
            raise OperatorTimeout(f"{argv[0]} did not finish within {timeout} s") from exc
        except OSError as exc:
            raise ProcessFailed(-1, str(exc)) from exc
        if proc.returncode != 0:
            raise ProcessFailed(proc.returncode, proc.stderr)
        try:
            out = read_rvol(dst)
        except (IoFailure, RvolError) as exc:
            raise OperatorContractViolation(f"{argv[0]} produced no readable output: {exc}") from exc
    if out.dims != volume.dims:
        raise OperatorContractViolation(f"{argv[0]} returned dims {out.dims}, expected {volume.dims}")
    return volume.with_data(out.data.astype("float64"), residual=out.residual)


class ExternalDenoiser(Denoiser):
    def __init__(self, command, timeout=DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout

    @property
    def name(self):
        return f"external:{self.command}"

    def raw_predict(self, x, sigma_e):
        return _run(self.command, x, sigma_e, self.timeout)


class ExternalCorrector(Corrector):
    def __init__(self, command, timeout=DEFAULT_TIMEOUT):
        self.command = command
        self.timeout = timeout

    @property
    def name(self):
        return f"external:{self.command}"

    def correct(self, x):
        return _run(self.command, x, None, self.timeout)


def external_operator(command, kind="corrector", timeout=DEFAULT_TIMEOUT):
    if kind == "denoiser":
        return ExternalDenoiser(command, timeout)
    if kind == "corrector":
        return ExternalCorrector(command, timeout)
    raise ValueError(f"kind must be 'denoiser' or 'corrector', got {kind!r}")
