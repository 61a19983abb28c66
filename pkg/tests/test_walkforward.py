import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wfbt.errors import CoverageGap, SeriesTooShort
from wfbt.walkforward import WalkPrediction, plan_walks, stitch


class TestPlanWalks:
    def test_minimal_fit_single_walk(self):
        plan = plan_walks(1500)
        assert len(plan.walks) == 1
        assert plan.walks[0].test == range(1250, 1500)
        assert plan.dropped_tail == 0

    def test_three_walks_tile(self):
        plan = plan_walks(2000)
        assert [w.test for w in plan.walks] == [
            range(1250, 1500), range(1500, 1750), range(1750, 2000)]

    def test_too_short(self):
        with pytest.raises(SeriesTooShort):
            plan_walks(1499)

    def test_trailing_days_dropped(self):
        plan = plan_walks(1749)
        assert len(plan.walks) == 1
        assert plan.dropped_tail == 249

    def test_walk_structure(self):
        plan = plan_walks(2100)
        for k, walk in enumerate(plan.walks):
            assert walk.walk_index == k
            assert walk.train.start == k * 250
            assert len(walk.train) == 1000
            assert len(walk.valid) == 250
            assert len(walk.test) == 250
            assert walk.train.stop == walk.valid.start
            assert walk.valid.stop == walk.test.start

    @given(st.integers(min_value=1500, max_value=30000))
    @settings(max_examples=200)
    def test_count_formula_and_tiling(self, total_len):
        plan = plan_walks(total_len)
        expected = (total_len - 1500) // 250 + 1
        assert len(plan.walks) == expected
        # test ranges tile contiguously without gaps or overlaps
        for a, b in zip(plan.walks, plan.walks[1:]):
            assert a.test.stop == b.test.start
        assert plan.oos_start == 1250
        assert plan.walks[-1].test.stop <= total_len
        assert plan.dropped_tail < 250

    def test_custom_window_lengths(self):
        plan = plan_walks(100, train_len=50, valid_len=10, test_len=10, step=10)
        assert len(plan.walks) == 4
        assert plan.walks[0].test == range(60, 70)


def _pred(walk, values=None, failed=False):
    n = len(walk.test)
    return WalkPrediction(
        walk_index=walk.walk_index,
        test_indices=walk.test,
        predicted_close=np.full(n, np.nan) if failed else np.asarray(values, dtype=float),
        actual_close=np.arange(n, dtype=float),
        model="TEST",
        failed=failed,
    )


class TestStitch:
    def test_additivity(self):
        plan = plan_walks(2000)
        preds = [_pred(w, np.ones(250) * w.walk_index) for w in plan.walks]
        out = stitch(preds, plan)
        assert out.predicted_close.size == 750
        assert out.test_indices == range(1250, 2000)

    def test_single_walk_identity(self):
        plan = plan_walks(1500)
        values = np.linspace(1, 2, 250)
        out = stitch([_pred(plan.walks[0], values)], plan)
        assert np.array_equal(out.predicted_close, values)

    def test_failed_walk_leaves_nan_gap(self):
        plan = plan_walks(2000)
        preds = [_pred(plan.walks[0], np.ones(250)),
                 _pred(plan.walks[1], failed=True),
                 _pred(plan.walks[2], np.ones(250))]
        out = stitch(preds, plan)
        gap = out.predicted_close[250:500]
        assert np.all(np.isnan(gap))
        assert not np.any(np.isnan(out.predicted_close[:250]))

    def test_missing_walk_raises(self):
        plan = plan_walks(2000)
        preds = [_pred(plan.walks[0], np.ones(250)),
                 _pred(plan.walks[2], np.ones(250))]
        with pytest.raises(CoverageGap):
            stitch(preds, plan)
