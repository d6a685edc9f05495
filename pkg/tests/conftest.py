"""Shared, expensive experiment runs (computed once per session)."""

from __future__ import annotations

import time

import pytest

from ssmred import workflows as wf


def _timed(fn):
    start = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - start


@pytest.fixture(scope="session")
def sdof_sweep():
    (rows, sm, assm, decay), seconds = _timed(lambda: wf.run_sweep(wf.SDOF_SWEEP))
    return {"rows": {r.rho_target: r for r in rows}, "sm": sm, "assm": assm, "decay": decay, "seconds": seconds}


@pytest.fixture(scope="session")
def hasel_sweep():
    (rows, sm, assm, decay), seconds = _timed(lambda: wf.run_sweep(wf.HASEL_CHECK))
    return {"rows": {r.rho_target: r for r in rows}, "sm": sm, "assm": assm, "decay": decay, "seconds": seconds}


@pytest.fixture(scope="session")
def joint_bench():
    (report, gains, sm, reference), seconds = _timed(lambda: wf.run_bench(wf.JOINT_BENCH))
    return {"report": report, "gains": gains, "sm": sm, "reference": reference, "seconds": seconds}
