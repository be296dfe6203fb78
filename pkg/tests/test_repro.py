"""End-to-end reproduction flows for the four worked examples."""

import pytest

from ldplab.cli import RunConfig, run_repro


@pytest.mark.parametrize("example", ["example1", "example2a", "example2b", "example3"])
def test_repro_examples_all_pass(tmp_path, example):
    cfg = RunConfig(command="repro", out=str(tmp_path), jobs=2, options={"example": example})
    lines, outputs = run_repro(example, cfg)
    assert lines and all(line.startswith("PASS") for line in lines)
    assert outputs
    for path in outputs:
        assert (tmp_path / path.split("/")[-1]).exists()
