import sys
import textwrap

import numpy as np
import pytest

from jdac.engine import JdacConfig, jdac_run
from jdac.errors import OperatorContractViolation, OperatorTimeout, ProcessFailed
from jdac.external import ExternalCorrector, ExternalDenoiser, external_operator
from jdac.operators import denoise_with, gaussian_denoiser, identity_denoiser
from jdac.volume import Volume


def script(tmp_path, name, body):
    p = tmp_path / name
    p.write_text(textwrap.dedent(body))
    return f"{sys.executable} {p}"


@pytest.fixture
def passthrough(tmp_path):
    return script(tmp_path, "copy.py", """
        import shutil, sys
        shutil.copyfile(sys.argv[1], sys.argv[2])
    """)


@pytest.fixture
def vol(rng):
    return Volume(rng.random((6, 7, 8)).astype(np.float32).astype(np.float64))


def test_passthrough_corrector_is_identity(passthrough, vol):
    out = external_operator(passthrough).correct(vol)
    assert np.array_equal(out.data, vol.data)


def test_denoiser_gets_sigma(tmp_path, vol):
    cmd = script(tmp_path, "zero.py", """
        import json, struct, sys
        buf = open(sys.argv[1], "rb").read()
        sigma = float(sys.argv[3])
        assert json.load(open(sys.argv[1] + ".json"))["sigma_e"] == sigma
        n = len(buf) - 36
        open(sys.argv[2], "wb").write(buf[:36] + bytes(n))
    """)
    d = external_operator(cmd, "denoiser")
    assert isinstance(d, ExternalDenoiser)
    out = denoise_with(d, vol, 0.1)
    assert np.array_equal(out.data, vol.data)


def test_nonzero_exit(tmp_path, vol):
    cmd = script(tmp_path, "fail.py", """
        import sys
        sys.stderr.write("boom")
        sys.exit(3)
    """)
    with pytest.raises(ProcessFailed) as info:
        ExternalCorrector(cmd).correct(vol)
    assert info.value.returncode == 3 and "boom" in info.value.stderr


def test_wrong_dims(tmp_path, vol):
    cmd = script(tmp_path, "shrink.py", """
        import sys
        from jdac.io import read_rvol, write_rvol
        from jdac.volume import Volume
        v = read_rvol(sys.argv[1])
        write_rvol(Volume(v.data[1:]), sys.argv[2])
    """)
    with pytest.raises(OperatorContractViolation):
        ExternalCorrector(cmd).correct(vol)


def test_no_output(tmp_path, vol):
    cmd = script(tmp_path, "noop.py", "pass\n")
    with pytest.raises(OperatorContractViolation):
        ExternalCorrector(cmd).correct(vol)


def test_timeout(tmp_path, vol):
    cmd = script(tmp_path, "slow.py", "import time\ntime.sleep(5)\n")
    with pytest.raises(OperatorTimeout):
        ExternalCorrector(cmd, timeout=0.5).correct(vol)


def test_missing_program(vol):
    with pytest.raises(ProcessFailed):
        ExternalCorrector("/nonexistent/program").correct(vol)


def test_engine_with_external_corrector(passthrough):
    y = Volume(np.clip(0.5 + np.random.default_rng(0).normal(0, 0.1, (16, 16, 16)), 0, 1).astype(np.float32)
               .astype(np.float64))
    ext = jdac_run(y, gaussian_denoiser(), ExternalCorrector(passthrough), JdacConfig(max_iters=2))
    assert ext.iterations_run >= 1 and ext.output.dims == y.dims


def test_bad_kind():
    with pytest.raises(ValueError):
        external_operator("cat", "segmenter")
    assert identity_denoiser().name
