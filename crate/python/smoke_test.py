"""Smoke test for the pymfdr extension module.

Build and run from the repository root:

    cargo build --release -p mfdr-python --features extension-module
    cp target/release/libpymfdr.so python/pymfdr.so
    python3 python/smoke_test.py
"""

import json
import math
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import pymfdr  # noqa: E402

FIXTURES = Path(__file__).resolve().parents[1] / "crates" / "cli" / "tests" / "fixtures"


def linear_rows(n=120, p=40, seed=3):
    rng = random.Random(seed)
    x = [[rng.gauss(0, 1) for _ in range(p)] for _ in range(n)]
    y = [2.0 * r[0] - 1.5 * r[1] + r[2] + rng.gauss(0, 1) for r in x]
    return x, y


def check_linear():
    x, y = linear_rows()
    data = pymfdr.Dataset(x, "linear", y=y)
    assert (data.n, data.p) == (120, 40)
    fit = pymfdr.fit_path(data)
    assert len(fit) == len(fit.lambdas) == len(fit.beta)
    assert all(a > b for a, b in zip(fit.lambdas, fit.lambdas[1:]))
    assert all(fit.converged)
    cv = pymfdr.cross_validate(data, fit, folds=5, seed=2)
    assert cv.lambda_1se >= cv.lambda_cv
    table = pymfdr.local_mfdr(data, fit, cv.index_cv)
    assert len(table) == 40
    assert all(0.0 <= m <= 1.0 for m in table.mfdr)
    top = table.sorted()[:3]
    assert set(top) == {0, 1, 2}, top
    assert 0.0 <= table.aggregate() <= 1.0
    parsed = json.loads(table.to_json())
    assert len(parsed["records"]) == 40
    assert table.to_csv().startswith("name,z,mfdr,active,estimator")
    path = pymfdr.mfdr_path(data, fit, "density")
    assert len(path) == len(fit)
    # the first grid point is λ_max: nothing active
    assert not any(path[0].active())


def check_csv_families():
    cox = pymfdr.Dataset.from_csv(str(FIXTURES / "survival.csv"), "cox", time="time", status="status")
    fit = pymfdr.fit_path(cox)
    table = pymfdr.local_mfdr(cox, fit, fit.nearest(0.1))
    assert table.lambda_ is not None
    logit = pymfdr.Dataset.from_csv(str(FIXTURES / "binary.csv"), "logistic", response="case")
    uni = pymfdr.univariate_fdr(logit)
    assert uni.active() == []
    assert uni.records[0][0] == "x1"


def check_estimators():
    rng = random.Random(7)
    z = [rng.gauss(0, 1) for _ in range(900)] + [rng.gauss(0, 5) for _ in range(100)]
    mfdr, pi0 = pymfdr.estimate_fdr(z)
    assert 0.7 < pi0 <= 1.0, pi0
    big = max(range(len(z)), key=lambda i: abs(z[i]))
    assert mfdr[big] < 0.01


def check_errors():
    x, y = linear_rows(n=30, p=12)
    try:
        pymfdr.Dataset(x, "cox", y=y)
    except pymfdr.MfdrError:
        pass
    else:
        raise AssertionError("cox without survival data should fail")
    try:
        pymfdr.Dataset(x, "poisson", y=y)
    except ValueError:
        pass
    else:
        raise AssertionError("unknown family should fail")


def check_oracle():
    r = pymfdr.oracle_check(n=200, p=50, replicates=200, seed=5)
    assert abs(r["avg_mfdr_selected"] - r["empirical_mfdr"]) < 0.05, r
    r = pymfdr.oracle_check(n=100, p=20, pi0=1.0, replicates=20)
    assert r["avg_mfdr_selected"] == r["empirical_mfdr"] == 1.0
    report = json.loads(pymfdr.simulate("violated", "linear", replicates=1, folds=3, seed=4))
    assert report["replicates"] == 1
    assert not math.isnan(report["comparison_row"]["noise_rate"])


if __name__ == "__main__":
    for check in (check_linear, check_csv_families, check_estimators, check_errors, check_oracle):
        check()
        print(f"ok  {check.__name__}")
    print("smoke test passed")
