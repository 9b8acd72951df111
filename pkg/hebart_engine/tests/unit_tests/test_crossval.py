import numpy as np
import pytest

from shared.config.settings import settings
from shared.utils.constants import FitMode, RngStreams
from shared.utils.exceptions import CrossValidationException
from shared.utils.logging_config import get_logger, setup_logging
from hebart_engine.application.services.crossval_service import fold_assignment, fold_stream_id

setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console
    )
logger = get_logger(__name__)


class TestFoldAssignment:

    @pytest.mark.parametrize("n,folds", [(10, 2), (10, 3), (97, 10), (180, 10), (5, 4)])
    def test_blocks_partition_the_rows(self, n, folds):
        blocks = fold_assignment(n, folds, seed=21)
        assert len(blocks) == folds
        joined = np.concatenate(blocks)
        assert joined.size == n
        np.testing.assert_array_equal(np.sort(joined), np.arange(n))
        sizes = [block.size for block in blocks]
        assert max(sizes) - min(sizes) <= 1

    def test_leave_one_out(self):
        blocks = fold_assignment(7, 7, seed=2)
        assert all(block.size == 1 for block in blocks)
        assert sorted(int(block[0]) for block in blocks) == list(range(7))

    def test_same_seed_same_assignment(self):
        first = fold_assignment(50, 5, seed=9)
        second = fold_assignment(50, 5, seed=9)
        for a, b in zip(first, second):
            np.testing.assert_array_equal(a, b)

    def test_seed_changes_assignment(self):
        first = fold_assignment(50, 5, seed=9)
        other = fold_assignment(50, 5, seed=10)
        assert any(not np.array_equal(a, b) for a, b in zip(first, other))

    def test_blocks_are_shuffled(self):
        blocks = fold_assignment(100, 4, seed=1)
        assert not np.array_equal(blocks[0], np.arange(25))

    @pytest.mark.parametrize("folds", [0, 1, 11])
    def test_out_of_range_folds(self, folds):
        with pytest.raises(CrossValidationException, match="folds"):
            fold_assignment(10, folds, seed=0)


class TestFoldStreams:

    def test_streams_are_distinct_and_clear_of_fixed_streams(self):
        ids = [fold_stream_id(fold, mode) for fold in range(10) for mode in FitMode]
        assert len(set(ids)) == len(ids)
        fixed = {RngStreams.SAMPLER, RngStreams.PREDICTION, RngStreams.SIMULATION,
                 RngStreams.HOLDOUT_SPLIT, RngStreams.FOLD_SPLIT}
        assert not fixed & set(ids)
