import numpy as np
import pytest

from lidpart.errors import (
    CoverageGapError,
    DuplicateEncodingError,
    ParseError,
    SpecMismatchError,
    UnknownOpError,
)
from lidpart.evolution import (
    BenchRecord,
    EvoConfig,
    SearchHistory,
    TabularBenchmark,
    best_architecture,
    evolve,
    load_benchmark,
    read_history_csv,
    write_benchmark_csv,
    write_history_csv,
)
from lidpart.space import (
    LayerSpec,
    OpMask,
    SpaceSpec,
    SubSupernet,
    contains,
    enumerate_subnets,
)


def grid_space(layers, ops):
    names = tuple(f"op{j}" for j in range(ops))
    return SpaceSpec(tuple(LayerSpec(f"layer{i}", names) for i in range(layers)))


def graded_benchmark(space, best, seed=0):
    """Full table sloping down with distance from a planted optimum."""
    rng = np.random.default_rng(seed)
    records = {}
    for arch in enumerate_subnets(SubSupernet.full(space)):
        dist = sum(a != b for a, b in zip(arch, best))
        val = 95.0 - 6.0 * dist + (float(rng.uniform(0.0, 2.0)) if dist else 0.0)
        records[arch] = BenchRecord(val_acc=val, test_acc=min(100.0, val + 0.5))
    return TabularBenchmark(space=space, records=records)


def two_leaves(space):
    """Bipartition the first layer: its lower-index ops vs the rest."""
    n = space.op_count(0)
    cut = min(2, n - 1)
    full = SubSupernet.full(space)
    a = full.with_mask(0, OpMask(tuple(1 if i < cut else 0 for i in range(n))))
    b = full.with_mask(0, OpMask(tuple(0 if i < cut else 1 for i in range(n))))
    return [a, b]


class TestTabularBenchmark:
    def test_lookup(self):
        space = grid_space(2, 2)
        bench = graded_benchmark(space, (1, 0))
        assert bench.val((1, 0)) == 95.0
        assert bench.test((1, 0)) == 95.5
        assert len(bench) == 4

    def test_missing_record(self):
        space = grid_space(2, 2)
        bench = TabularBenchmark(space=space, records={})
        with pytest.raises(CoverageGapError, match="0-0"):
            bench.val((0, 0))


class TestLoadBenchmark:
    def write(self, tmp_path, text):
        path = tmp_path / "bench.csv"
        path.write_text(text)
        return path

    def test_round_trip(self, tmp_path):
        space = grid_space(3, 3)
        bench = graded_benchmark(space, (0, 1, 2))
        path = tmp_path / "bench.csv"
        write_benchmark_csv(bench, path)
        loaded = load_benchmark(path, space)
        assert loaded == bench

    def test_row_count_preserved(self, tmp_path):
        space = grid_space(3, 3)
        path = tmp_path / "bench.csv"
        write_benchmark_csv(graded_benchmark(space, (0, 0, 0)), path)
        assert len(load_benchmark(path, space)) == 27

    def test_bad_header(self, tmp_path):
        path = self.write(tmp_path, "arch,val,test\n0-0,1.0,2.0\n")
        with pytest.raises(ParseError, match="header"):
            load_benchmark(path, grid_space(2, 2))

    def test_empty_file(self, tmp_path):
        path = self.write(tmp_path, "")
        with pytest.raises(ParseError, match="empty"):
            load_benchmark(path, grid_space(2, 2))

    def test_unknown_op_in_encoding(self, tmp_path):
        path = self.write(
            tmp_path, "encoding,val_acc,test_acc\n0-3-1-2-9-4,50.0,50.0\n"
        )
        space = grid_space(6, 5)
        with pytest.raises(UnknownOpError):
            load_benchmark(path, space)

    def test_duplicate_encoding(self, tmp_path):
        path = self.write(
            tmp_path,
            "encoding,val_acc,test_acc\n0-1,50.0,50.0\n0-1,60.0,60.0\n",
        )
        with pytest.raises(DuplicateEncodingError):
            load_benchmark(path, grid_space(2, 2))

    def test_non_numeric_accuracy(self, tmp_path):
        path = self.write(tmp_path, "encoding,val_acc,test_acc\n0-1,abc,50.0\n")
        with pytest.raises(ParseError, match="non-numeric"):
            load_benchmark(path, grid_space(2, 2))

    def test_accuracy_out_of_range(self, tmp_path):
        path = self.write(tmp_path, "encoding,val_acc,test_acc\n0-1,101.0,50.0\n")
        with pytest.raises(ParseError, match=r"\[0, 100\]"):
            load_benchmark(path, grid_space(2, 2))

    def test_wrong_field_count(self, tmp_path):
        path = self.write(tmp_path, "encoding,val_acc,test_acc\n0-1,50.0\n")
        with pytest.raises(ParseError, match="3 fields"):
            load_benchmark(path, grid_space(2, 2))


class TestEvoConfig:
    def test_defaults_valid(self):
        cfg = EvoConfig()
        assert cfg.population_size == 50
        assert cfg.epochs == 50

    @pytest.mark.parametrize(
        "kwargs",
        [
            {"population_size": 1},
            {"epochs": -1},
            {"mutation_rate": 1.5},
            {"crossover_rate": -0.1},
            {"tournament_size": 0},
        ],
    )
    def test_invalid_rejected(self, kwargs):
        with pytest.raises(ValueError):
            EvoConfig(**kwargs)


class TestEvolve:
    def setup(self, seed=0, **kwargs):
        space = grid_space(3, 3)
        bench = graded_benchmark(space, (2, 1, 0))
        defaults = dict(population_size=12, epochs=8, seed=seed)
        defaults.update(kwargs)
        return space, two_leaves(space), bench, EvoConfig(**defaults)

    def test_epoch_zero_is_initial_population(self):
        _, leaves, bench, cfg = self.setup(epochs=0)
        history = evolve(leaves, bench, cfg)
        assert len(history.epochs) == 1
        assert history.epochs[0].epoch == 0
        assert len(history.populations[0]) == cfg.population_size

    def test_records_every_epoch(self):
        _, leaves, bench, cfg = self.setup()
        history = evolve(leaves, bench, cfg)
        assert [e.epoch for e in history.epochs] == list(range(9))
        assert all(len(p) == cfg.population_size for p in history.populations)

    def test_initial_population_spread_across_leaves(self):
        _, leaves, bench, cfg = self.setup()
        history = evolve(leaves, bench, cfg)
        counts = [
            sum(contains(leaf, enc) for enc in history.populations[0])
            for leaf in leaves
        ]
        assert counts == [6, 6]

    def test_every_member_stays_inside_one_leaf(self):
        _, leaves, bench, cfg = self.setup()
        history = evolve(leaves, bench, cfg)
        for population in history.populations:
            for enc in population:
                assert sum(contains(leaf, enc) for leaf in leaves) == 1

    def test_best_val_is_monotone(self):
        _, leaves, bench, cfg = self.setup()
        history = evolve(leaves, bench, cfg)
        bests = [e.best_val for e in history.epochs]
        assert all(a <= b for a, b in zip(bests, bests[1:]))

    def test_elite_survives(self):
        _, leaves, bench, cfg = self.setup()
        history = evolve(leaves, bench, cfg)
        for epoch, population in enumerate(history.populations[1:], start=1):
            prev = history.populations[epoch - 1]
            best_prev = max(prev, key=bench.val)
            assert bench.val(population[0]) >= bench.val(best_prev)

    def test_deterministic(self):
        _, leaves, bench, cfg = self.setup(seed=5)
        h1 = evolve(leaves, bench, cfg)
        h2 = evolve(leaves, bench, cfg)
        assert h1.epochs == h2.epochs
        assert h1.populations == h2.populations

    def test_seed_changes_trajectory(self):
        _, leaves, bench, _ = self.setup()
        h1 = evolve(leaves, bench, EvoConfig(population_size=12, epochs=8, seed=1))
        h2 = evolve(leaves, bench, EvoConfig(population_size=12, epochs=8, seed=2))
        assert h1.populations != h2.populations

    def test_no_variation_keeps_population_fixed(self):
        _, leaves, bench, _ = self.setup()
        cfg = EvoConfig(
            population_size=4, epochs=5, mutation_rate=0.0, crossover_rate=0.0, seed=0
        )
        pinned = [(0, 0, 0)] * 4
        history = evolve(leaves, bench, cfg, initial_population=pinned)
        assert all(population == pinned for population in history.populations)
        assert all(e.best_encoding == (0, 0, 0) for e in history.epochs)
        assert all(e.std_val == 0.0 for e in history.epochs)

    def test_earlier_discovery_wins_val_ties(self):
        space = grid_space(2, 2)
        records = {
            (0, 0): BenchRecord(90.0, 91.0),
            (0, 1): BenchRecord(90.0, 80.0),
            (1, 0): BenchRecord(10.0, 10.0),
            (1, 1): BenchRecord(10.0, 10.0),
        }
        bench = TabularBenchmark(space=space, records=records)
        cfg = EvoConfig(
            population_size=4, epochs=4, mutation_rate=0.0, crossover_rate=0.0, seed=0
        )
        history = evolve(
            two_leaves(space),
            bench,
            cfg,
            initial_population=[(0, 0), (0, 1), (1, 0), (1, 1)],
        )
        assert all(e.best_encoding == (0, 0) for e in history.epochs)

    def test_single_layer_space_finds_optimum_fast(self):
        space = grid_space(1, 5)
        bench = graded_benchmark(space, (3,))
        leaves = [SubSupernet.full(space)]
        cfg = EvoConfig(population_size=10, epochs=3, mutation_rate=1.0, seed=0)
        history = evolve(leaves, bench, cfg)
        assert history.final_best.best_val == 95.0
        assert history.final_best.best_encoding == (3,)

    def test_coverage_gap_detected_up_front(self):
        space, leaves, bench, cfg = self.setup()
        records = dict(bench.records)
        records.pop((0, 0, 0))
        partial = TabularBenchmark(space=space, records=records)
        with pytest.raises(CoverageGapError, match="26 of 27"):
            evolve(leaves, partial, cfg)

    def test_overlapping_leaves_rejected(self):
        space, _, bench, cfg = self.setup()
        full = SubSupernet.full(space)
        with pytest.raises(ValueError, match="overlap"):
            evolve([full, full], bench, cfg)

    def test_partial_cover_rejected(self):
        space, leaves, bench, cfg = self.setup()
        with pytest.raises(ValueError, match="cover"):
            evolve(leaves[:1], bench, cfg)

    def test_leaf_space_disagreement_rejected(self):
        _, leaves, bench, cfg = self.setup()
        stray = SubSupernet.full(
            SpaceSpec(tuple(LayerSpec(f"alt{i}", ("x", "y", "z")) for i in range(3)))
        )
        with pytest.raises(SpecMismatchError):
            evolve([leaves[0], stray], bench, cfg)

    def test_benchmark_space_mismatch_rejected(self):
        _, leaves, _, cfg = self.setup()
        other_space = SpaceSpec(
            tuple(LayerSpec(f"alt{i}", ("x", "y", "z")) for i in range(3))
        )
        other_bench = graded_benchmark(other_space, (0, 0, 0))
        with pytest.raises(SpecMismatchError, match="benchmark"):
            evolve(leaves, other_bench, cfg)

    def test_pinned_population_must_match_size(self):
        _, leaves, bench, cfg = self.setup()
        with pytest.raises(ValueError, match="initial population"):
            evolve(leaves, bench, cfg, initial_population=[(0, 0, 0)])

    def test_best_architecture_reports_test_accuracy(self):
        _, leaves, bench, cfg = self.setup()
        history = evolve(leaves, bench, cfg)
        enc, test_acc = best_architecture(history, bench)
        assert enc == history.final_best.best_encoding
        assert test_acc == bench.test(enc)

    def test_empty_history_has_no_best(self):
        with pytest.raises(ValueError, match="empty"):
            SearchHistory().final_best


class TestHistoryCsv:
    def make_history(self):
        space = grid_space(3, 3)
        bench = graded_benchmark(space, (2, 1, 0))
        cfg = EvoConfig(population_size=8, epochs=4, seed=3)
        return evolve(two_leaves(space), bench, cfg)

    def test_round_trip(self, tmp_path):
        history = self.make_history()
        path = tmp_path / "history.csv"
        write_history_csv(history, path)
        rows = read_history_csv(path)
        assert len(rows) == len(history.epochs)
        for row, stat in zip(rows, history.epochs):
            assert row["epoch"] == stat.epoch
            assert row["mean_val"] == stat.mean_val
            assert row["std_val"] == stat.std_val
            assert row["best_val"] == stat.best_val
            assert row["best_encoding"] == "-".join(map(str, stat.best_encoding))

    def test_rewrites_are_byte_identical(self, tmp_path):
        history = self.make_history()
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        write_history_csv(history, a)
        write_history_csv(history, b)
        assert a.read_bytes() == b.read_bytes()

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "history.csv"
        path.write_text("epoch,mean\n0,1.0\n")
        with pytest.raises(ParseError, match="header"):
            read_history_csv(path)
