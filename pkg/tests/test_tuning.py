import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lonjacast.spaces import FAMILIES, SERIES_FAMILIES, champion_defaults, search_space
from lonjacast.tuning import (
    Choice,
    IntUniform,
    LogUniform,
    SearchSpace,
    Uniform,
    random_search,
    sample_params,
)


class TestDistributions:
    def test_uniform_bounds(self):
        rng = np.random.default_rng(0)
        d = Uniform(2.0, 3.0)
        draws = [d.draw(rng) for _ in range(200)]
        assert all(2.0 <= x <= 3.0 for x in draws)

    def test_loguniform_spans_decades(self):
        rng = np.random.default_rng(1)
        d = LogUniform(1e-4, 1e2)
        draws = np.array([d.draw(rng) for _ in range(500)])
        assert draws.min() < 1e-3 and draws.max() > 1e1

    def test_intuniform_inclusive(self):
        rng = np.random.default_rng(2)
        d = IntUniform(1, 3)
        draws = {d.draw(rng) for _ in range(300)}
        assert draws == {1, 2, 3}

    def test_choice(self):
        rng = np.random.default_rng(3)
        d = Choice(("a", "b"))
        assert {d.draw(rng) for _ in range(100)} == {"a", "b"}

    def test_validation(self):
        with pytest.raises(ValueError):
            Uniform(1.0, 1.0)
        with pytest.raises(ValueError):
            LogUniform(0.0, 1.0)
        with pytest.raises(ValueError):
            IntUniform(5, 5)
        with pytest.raises(ValueError):
            Choice(())


class TestSampling:
    def space(self):
        return SearchSpace(
            family="demo",
            params={"b": Uniform(0, 1), "a": IntUniform(1, 10), "c": Choice((True, False))},
        )

    def test_name_order_independence(self):
        # same seed, different dict insertion order -> identical samples
        s1 = self.space()
        s2 = SearchSpace(
            family="demo",
            params={"c": Choice((True, False)), "a": IntUniform(1, 10), "b": Uniform(0, 1)},
        )
        a = sample_params(s1, np.random.default_rng(7))
        b = sample_params(s2, np.random.default_rng(7))
        assert a == b

    def test_deterministic_per_seed(self):
        s = self.space()
        assert sample_params(s, np.random.default_rng(4)) == sample_params(
            s, np.random.default_rng(4)
        )


class TestRandomSearch:
    def test_finds_known_minimum(self):
        space = SearchSpace(family="demo", params={"x": Uniform(-1, 1)})
        best, records = random_search(space, 200, lambda p: (p["x"] - 0.3) ** 2, seed=0)
        assert best["x"] == pytest.approx(0.3, abs=0.05)
        assert len(records) == 200

    def test_failed_trials_recorded_not_fatal(self):
        space = SearchSpace(family="demo", params={"x": Uniform(0, 1)})

        def objective(p):
            if p["x"] > 0.5:
                raise RuntimeError("boom")
            return p["x"]

        best, records = random_search(space, 50, objective, seed=1)
        assert best["x"] <= 0.5
        failed = [r for r in records if r.status != "ok"]
        assert failed and all(r.rmse == float("inf") for r in failed)
        assert "boom" in failed[0].status

    def test_all_failed_raises(self):
        space = SearchSpace(family="demo", params={"x": Uniform(0, 1)})
        with pytest.raises(RuntimeError, match="all trials failed"):
            random_search(space, 5, lambda p: 1 / 0, seed=0)

    def test_tie_breaks_to_lowest_index(self):
        space = SearchSpace(family="demo", params={"x": Uniform(0, 1)})
        best, records = random_search(space, 10, lambda p: 1.0, seed=2)
        assert best == records[0].params

    def test_evaluation_order_cannot_change_stream(self):
        # objective behaviour must not affect which params are drawn
        space = SearchSpace(family="demo", params={"x": Uniform(0, 1)})
        _, recs_a = random_search(space, 20, lambda p: p["x"], seed=3)
        _, recs_b = random_search(
            space, 20, lambda p: (_ for _ in ()).throw(ValueError) if p["x"] > 0.1 else p["x"],
            seed=3,
        )
        assert [r.params for r in recs_a] == [r.params for r in recs_b]

    def test_non_finite_objective_is_failure(self):
        space = SearchSpace(family="demo", params={"x": Uniform(0, 1)})
        best, records = random_search(
            space, 20, lambda p: float("nan") if p["x"] > 0.5 else p["x"], seed=4
        )
        assert all(r.status != "ok" for r in records if r.params["x"] > 0.5)

    def test_record_json(self):
        space = SearchSpace(family="demo", params={"x": Uniform(0, 1)})
        _, records = random_search(space, 3, lambda p: p["x"], seed=5)
        data = json.loads(records[0].to_json())
        assert set(data) == {"index", "params", "rmse", "wall_time", "status"}


class TestFamilySpaces:
    def test_every_family_has_a_space_with_window(self):
        for family in FAMILIES:
            space = search_space(family)
            assert "window" in space.params
            sample = sample_params(space, np.random.default_rng(0))
            assert isinstance(sample["window"], int)

    def test_full_spaces_contain_published_champion_settings(self):
        """The full-size spaces must admit the known-good operating points."""
        contains = {
            "ridge": {"alpha": 0.010034555, "window": 2},
            "random_forest": {"n_estimators": 99, "min_samples_split": 5,
                              "min_samples_leaf": 0.002446626},
            "extra_trees": {"n_estimators": 115, "max_depth": 198,
                            "min_samples_leaf": 0.012833897},
            "svr": {"C": 0.151861, "epsilon": 0.002203},
            "gbdt": {"learning_rate": 0.15, "max_depth": 4, "n_estimators": 150,
                     "min_child_samples": 5},
            "arima": {"p": 4, "d": 0, "q": 0},
        }
        for family, point in contains.items():
            space = search_space(family, desk=False)
            for name, value in point.items():
                dist = space.params[name]
                if isinstance(dist, (Uniform, LogUniform)):
                    assert dist.lo <= value <= dist.hi, (family, name)
                elif isinstance(dist, IntUniform):
                    assert dist.lo <= value <= dist.hi, (family, name)
                else:
                    assert value in dist.values, (family, name)

    def test_sarima_space_contains_seasonal_configuration(self):
        space = search_space("sarima", desk=False)
        target = {"p": 1, "d": 1, "q": 2, "P": 0, "D": 1, "Q": 1}
        for name, value in target.items():
            dist = space.params[name]
            values = dist.values if isinstance(dist, Choice) else range(dist.lo, dist.hi + 1)
            assert value in values, name

    def test_series_families_subset(self):
        assert set(SERIES_FAMILIES) <= set(FAMILIES)

    def test_champion_defaults(self):
        champ = champion_defaults()
        assert champ["family"] == "ridge"
        assert champ["window"] == 2
        assert champ["alpha"] == pytest.approx(0.010034555)

    def test_unknown_family(self):
        with pytest.raises(ValueError, match="family"):
            search_space("kitchen_sink")
