from __future__ import annotations

import pytest

from dtproj.generate import PROFILES, FixtureSpec, GeneratorError, generate_fixture
from dtproj.harness import run_pipeline
from dtproj.scenario import dumps, loads


@pytest.mark.parametrize("profile", PROFILES)
def test_same_spec_same_bytes(profile):
    spec = FixtureSpec(5, profile)
    a, b = generate_fixture(spec), generate_fixture(spec)
    assert dumps(a.scenario) == dumps(b.scenario)
    assert a.certificate == b.certificate


@pytest.mark.parametrize("profile", PROFILES)
def test_generated_scenarios_round_trip(profile):
    s = generate_fixture(FixtureSpec(11, profile)).scenario
    assert loads(dumps(s)) == s


def test_different_seeds_differ():
    assert dumps(generate_fixture(FixtureSpec(1)).scenario) != dumps(generate_fixture(FixtureSpec(2)).scenario)


def test_one_dimensional_fixture():
    r = generate_fixture(FixtureSpec(0, "hl-only", max_dim=1)).scenario.realizations[0]
    assert r.space.total_dim == 1
    assert run_pipeline(r).ranks("perversity") == {0: 1}


@pytest.mark.parametrize("seed", range(20))
def test_size_bounds(seed):
    spec = FixtureSpec(seed, "supports", max_dim=9, max_strata=2, max_length=5)
    r = generate_fixture(spec).scenario.realizations[0]
    assert r.space.total_dim <= 9
    assert len(r.space.levels) <= 5
    assert len(r.strata) <= 2


def test_seed_42_supports_certificate():
    fx = generate_fixture(FixtureSpec(42, "supports"))
    p = run_pipeline(fx.scenario.realizations[0])
    got = {b: p.triple.space.graded.gr_dim(b) for b in p.triple.space.levels}
    assert got == fx.certificate["perverse_dims"]
    labels = {row["label"] for row in fx.certificate["supports"]}
    assert labels == {s.label for s in fx.scenario.realizations[0].strata}


@pytest.mark.parametrize("bad", [dict(profile="nope"), dict(max_dim=0), dict(max_length=0), dict(max_strata=0)])
def test_invalid_specs(bad):
    with pytest.raises(GeneratorError):
        FixtureSpec(0, **bad)
