import csv
import io
from dataclasses import replace

import numpy as np
import pytest

from redpool import (
    ConfigError,
    InstabilityError,
    ProviderParams,
    SharingConfig,
    ksbs,
    mean_response_pair,
    typed_ctmc_oracle,
    waiting_probabilities,
)
from redpool.cos import mixed_config_metrics
from redpool.desim import (
    CSV_COLUMNS,
    Estimate,
    SimScenario,
    child_seed,
    results_to_csv,
    simulate,
    simulate_mixed,
    splitmix64,
)

H = 300_000


def test_same_scenario_same_result():
    scn = SimScenario(ProviderParams(0.5, 1, 2), ProviderParams(0.8, 1, 2), (1, 2), horizon=50_000, seed=7)
    a, b = simulate(scn), simulate(scn)
    assert a.C == b.C and a.D == b.D
    c = simulate(replace(scn, seed=8))
    assert c.C != a.C


def test_replications_use_derived_seeds():
    scn = SimScenario(ProviderParams(0.3), ProviderParams(0.4), (1, 1), horizon=20_000, replications=4, seed=3)
    a = simulate(scn)
    b = simulate(scn, n_jobs=2)
    assert a.C == b.C
    assert len({child_seed(3, r) for r in range(4)}) == 4
    assert all(0 <= child_seed(2 ** 64 - 1, r) < 2 ** 32 for r in range(4))


def test_splitmix_reference_value():
    # first output of the reference generator seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF


def test_mm1_queues():
    scn = SimScenario(ProviderParams(0.5), ProviderParams(0.3), (0, 0), horizon=H, seed=1)
    r = simulate(scn)
    assert r.C[0].within(0.5) and r.C[1].within(0.3)
    assert r.D[0].within(2.0) and r.D[1].within(1 / 0.7)
    assert r.violations == 0


def test_full_sharing_single_servers():
    p1, p2 = ProviderParams(0.1), ProviderParams(0.5)
    r = simulate(SimScenario(p1, p2, (1, 1), horizon=H, seed=2))
    assert r.C[0].within(0.13846153846153847)
    assert r.C[1].within(0.13846153846153847)


@pytest.mark.parametrize("assignment", ["arc", "uniform"])
def test_cos_matches_chain(assignment):
    p1, p2 = ProviderParams(0.9, 1, 2), ProviderParams(0.5, 1, 1)
    want = typed_ctmc_oracle(p1, p2, (1, 0), assignment=assignment)
    r = simulate(SimScenario(p1, p2, (1, 0), horizon=H, seed=4, assignment=assignment))
    for i in range(2):
        assert r.C[i].within(want.C[i]), (r.C[i], want.C[i])
        assert r.D[i].within(want.D[i]), (r.D[i], want.D[i])


def test_mixture_at_bargaining_point():
    p1, p2 = ProviderParams(0.1), ProviderParams(0.5)
    k = ksbs(p1, p2, grid_step=0.01).k
    want = mixed_config_metrics(p1, p2, *k)
    r = simulate_mixed(SimScenario(p1, p2, (1, 1), horizon=H, seed=5), *k)
    assert r.extra["k"] == k
    assert r.C[0].within(want[0]) and r.C[1].within(want[1])


def test_symmetric_mixture():
    p1, p2 = ProviderParams(0.4), ProviderParams(0.3)
    want = mixed_config_metrics(p1, p2, 0.5, 0.5)
    r = simulate_mixed(SimScenario(p1, p2, (0, 0), horizon=H, seed=6), 0.5, 0.5)
    assert len(r.extra["plan"]) == 4
    assert r.C[0].within(want[0]) and r.C[1].within(want[1])


def test_integral_mixture_is_plain_run():
    p1, p2 = ProviderParams(0.4), ProviderParams(0.3)
    scn = SimScenario(p1, p2, (0, 0), horizon=20_000, seed=6)
    assert simulate_mixed(scn, 1.0, 0.0).C == simulate(replace(scn, cfg=SharingConfig(1, 0))).C


def test_coc_full_pooling_delay():
    p1, p2 = ProviderParams(1.3, 1, 2), ProviderParams(0.9, 1, 2)
    want = mean_response_pair(p1, p2, (2, 2))
    r = simulate(SimScenario(p1, p2, (2, 2), policy="coc", horizon=H, seed=9))
    assert r.D[0].within(want[0]) and r.D[1].within(want[1])


def test_coc_partial_pooling_delay():
    p1, p2 = ProviderParams(1.3, 1, 2), ProviderParams(0.9, 1, 2)
    want = mean_response_pair(p1, p2, (1, 0))
    r = simulate(SimScenario(p1, p2, (1, 0), policy="coc", horizon=H, seed=10))
    assert r.D[0].within(want[0]) and r.D[1].within(want[1])


def test_pasta_wait_fraction_matches_blocked_mass():
    p1, p2 = ProviderParams(0.5, 1, 2), ProviderParams(0.8, 1, 2)
    want = waiting_probabilities(p1, p2, (1, 2))
    r = simulate(SimScenario(p1, p2, (1, 2), horizon=H, seed=11))
    assert r.C[0].within(want[0]) and r.C[1].within(want[1])


def test_estimate_interval():
    e = Estimate.from_samples(np.array([1.0, 2.0, 3.0, 4.0]), 4)
    assert e.mean == 2.5
    assert e.ci_lo < e.mean < e.ci_hi
    assert e.within(2.5 + 2.9 * e.stderr) and not e.within(2.5 + 3.1 * e.stderr)


def test_csv_round_trip():
    scn = SimScenario(ProviderParams(0.3), ProviderParams(0.4), (1, 0), horizon=20_000, seed=12)
    r = simulate(scn)
    text = results_to_csv([r, r])
    rows = list(csv.DictReader(io.StringIO(text)))
    assert tuple(rows[0]) == CSV_COLUMNS
    assert len(rows) == 8
    assert float(rows[0]["estimate"]) == r.C[0].mean


def test_scenario_validation():
    p = ProviderParams(0.5)
    with pytest.raises(ConfigError):
        SimScenario(p, p, (0, 0), policy="fifo")
    with pytest.raises(ConfigError):
        SimScenario(p, p, (0, 0), horizon=100, warmup=100)
    with pytest.raises(ConfigError):
        SimScenario(p, p, (0, 0), assignment="random")
    with pytest.raises(ConfigError):
        simulate(SimScenario(ProviderParams(0.5, 1.0), ProviderParams(0.5, 2.0), (0, 0), horizon=1000))
    with pytest.raises(ConfigError):
        simulate_mixed(SimScenario(p, p, (0, 0), policy="coc", horizon=1000), 0.5, 0.5)
    with pytest.raises(InstabilityError):
        simulate(SimScenario(ProviderParams(1.5, 1, 1), ProviderParams(0.6), (0, 0), horizon=1000))
