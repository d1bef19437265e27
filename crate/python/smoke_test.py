"""Quick end-to-end check of the Python bindings.

Build first, e.g. ``maturin develop -m crates/py/Cargo.toml``, then run
``python python/smoke_test.py``.
"""

import datetime as dt
import math
import random
import tempfile

import cfdcast


def check_regression():
    rng = random.Random(3)
    x = [[1.0 + rng.gauss(0, 1), 2.0 + rng.gauss(0, 1)] for _ in range(80)]
    y = [0.5 * a - 1.5 * b + rng.gauss(0, 0.1) for a, b in x]
    post = cfdcast.fit(x, y)
    assert post.dof == 78
    assert abs(post.beta_hat[0] - 0.5) < 0.05 and abs(post.beta_hat[1] + 1.5) < 0.05
    betas, sigma2 = post.sample(2000, 1)
    assert len(betas) == 2000 and all(s > 0 for s in sigma2)
    assert post.sample(5, 9) == post.sample(5, 9)


def check_helpers():
    assert cfdcast.flag_stale([1.0, 1.0, 2.0, 2.0, 3.0]) == [False, True, False, True, False]
    start, end = cfdcast.delivery_period(dt.date(2010, 11, 15), "Q1")
    assert (start, end) == (dt.date(2011, 1, 1), dt.date(2011, 3, 31))
    series = [(t, 50.0) for t in range(60)]
    model = cfdcast.fit_seasonal(series)
    assert abs(model["gamma0"]) < 1e-12 and max(abs(r) for r in model["residuals"]) < 1e-12
    try:
        cfdcast.fit_seasonal([(0, 100.0)] * 10)
    except cfdcast.CfdcastError as e:
        assert str(e).startswith("seasonal.")
    else:
        raise AssertionError("fill of 100% accepted")


def check_pipeline():
    with tempfile.TemporaryDirectory() as d:
        profiles = cfdcast.synthetic_market(d, seed=5, days=300)
        panel = cfdcast.Panel.ingest(d)
        assert 280 < len(panel.dates) <= 300
        assert panel.summary()["n_dates"] == len(panel.dates)
        posteriors = panel.fit()
        assert len(posteriors) > 0
        table = panel.coefficient_table(posteriors)
        assert "beta_WA" in table and "NA" in table

        no2 = next(p for p in profiles if p.target == "NO2")
        assert panel.validate_profile(no2) == no2
        again = cfdcast.Profile.from_toml(no2.to_toml())
        assert again.content_hash() == no2.content_hash()
        weights = no2.sample_weights(100, 4)
        assert all(math.isclose(sum(row), 1.0) for draw in weights for row in draw)

        a = panel.forecast(posteriors, "NO2", "M1", profile=no2, n=500, seed=7)
        b = panel.forecast(posteriors, "NO2", "M1", profile=no2, n=500, seed=7, threads=1)
        assert a.to_csv() == b.to_csv()
        lo, mid, hi = a.quantiles
        assert all(l <= m <= h for l, m, h in zip(lo, mid, hi))
        assert a.to_csv().splitlines()[0] == "date,mean,q2.5,q50,q97.5,n_draws"

        observed = panel.forecast(posteriors, "NO1", "Q1", n=200)
        assert 0 < len(observed) <= len(panel.dates)
        records = panel.backtest("NO1", "M1")
        assert records and "difference" in records[0]


if __name__ == "__main__":
    check_regression()
    check_helpers()
    check_pipeline()
    print("smoke test passed")
