import numpy as np
import pytest

from shared.config.settings import settings
from shared.models.dataset import Dataset, LabelTable, ResponseTransform, build_dataset, standardize
from shared.utils.exceptions import DatasetIngestException, StandardizationException
from shared.utils.logging_config import get_logger, setup_logging
from hebart_engine.infrastructure.repositories.dataset_repository import (
    dataset_to_frame,
    ingest_csv,
    write_dataset_csv,
)

setup_logging(
        log_level=settings.log_level,
        log_file=settings.log_file,
        log_to_console=settings.log_to_console
    )
logger = get_logger(__name__)


class TestStandardize:

    def test_arithmetic_sequence(self):
        scaled, transform = standardize([2.0, 4.0, 6.0])
        half = np.sqrt(1.5)
        np.testing.assert_allclose(scaled, [-half, 0.0, half], atol=1e-12)
        assert transform.center == pytest.approx(4.0)
        assert transform.scale == pytest.approx(np.sqrt(8.0 / 3.0))

    def test_constant_vector_names_column(self):
        with pytest.raises(StandardizationException, match="constant response.*Reaction"):
            standardize([5.0, 5.0, 5.0], column="Reaction")

    def test_empty_and_non_finite(self):
        with pytest.raises(StandardizationException):
            standardize([])
        with pytest.raises(StandardizationException):
            standardize([1.0, np.nan])

    def test_inverse_round_trip(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            raw = rng.normal(rng.uniform(-50, 50), rng.uniform(0.1, 20), size=rng.integers(2, 40))
            scaled, transform = standardize(raw)
            assert np.mean(scaled) == pytest.approx(0.0, abs=1e-12)
            assert np.std(scaled) == pytest.approx(1.0, rel=1e-12)
            np.testing.assert_allclose(transform.inverse(scaled), raw, rtol=1e-10, atol=1e-10)

    def test_transform_rejects_non_positive_scale(self):
        with pytest.raises(StandardizationException):
            ResponseTransform(center=0.0, scale=0.0)


class TestLabelTable:

    def test_first_appearance_order(self):
        table, codes = LabelTable.from_raw(["B", "A", "B", "C"])
        assert table.labels == ("B", "A", "C")
        np.testing.assert_array_equal(codes, [0, 1, 0, 2])

    def test_reindexing_is_stable(self):
        raw = ["308", "309", "308", "351", "309"]
        _, codes = LabelTable.from_raw(raw)
        for i in range(len(raw)):
            for j in range(len(raw)):
                assert (raw[i] == raw[j]) == (codes[i] == codes[j])

    def test_encode_unknown(self):
        table, _ = LabelTable.from_raw(["a", "b"])
        np.testing.assert_array_equal(table.encode(["b", "zzz", None]), [1, -1, -1])
        assert table.index_of("zzz") is None

    def test_dict_round_trip(self):
        table, _ = LabelTable.from_raw(["x", "y"])
        assert LabelTable.from_dict(table.to_dict()).labels == table.labels


class TestDataset:

    def test_row_count_mismatch(self):
        table, group = LabelTable.from_raw(["a", "a"])
        with pytest.raises(DatasetIngestException):
            Dataset(
                covariates=np.zeros((3, 1)),
                response=np.zeros(2),
                group=group,
                label_table=table,
                response_transform=ResponseTransform.identity(),
            )

    def test_arrays_are_copied_and_read_only(self):
        x = np.arange(4.0).reshape(-1, 1)
        dataset = build_dataset(x, [1.0, 2.0, 3.0, 5.0], ["a", "b", "a", "b"])
        assert x.flags.writeable
        assert not dataset.covariates.flags.writeable
        with pytest.raises(ValueError):
            dataset.response[0] = 1.0

    def test_subset_keeps_table_and_transform(self):
        dataset = build_dataset(np.arange(6.0), [1.0, 2.0, 3.0, 4.0, 5.0, 7.0], list("aabbcc"))
        part = dataset.subset(np.array([0, 1, 2]))
        assert part.n == 3
        assert part.label_table is dataset.label_table
        assert part.response_transform is dataset.response_transform
        np.testing.assert_array_equal(part.trained_groups(), [0, 1])


class TestIngestCsv:

    def _write(self, tmp_path, text, name="data.csv"):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    def test_three_rows_two_groups(self, tmp_path):
        path = self._write(tmp_path, "y,x,g\n10,1.5,A\n20,2.5,B\n30,3.5,A\n")
        dataset = ingest_csv(path, "y", "g", ["x"])
        assert dataset.n == 3
        assert dataset.n_groups == 2
        half = np.sqrt(1.5)
        np.testing.assert_allclose(dataset.response, [-half, 0.0, half], atol=1e-12)
        np.testing.assert_allclose(dataset.raw_response, [10.0, 20.0, 30.0], rtol=1e-10)
        logger.info("✓ test_three_rows_two_groups passed")

    def test_single_group(self, tmp_path):
        path = self._write(tmp_path, "y,x,g\n1,0,only\n2,1,only\n4,2,only\n")
        assert ingest_csv(path, "y", "g", ["x"]).n_groups == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(DatasetIngestException, match="not found"):
            ingest_csv(tmp_path / "nope.csv", "y", "g", ["x"])

    def test_missing_column(self, tmp_path):
        path = self._write(tmp_path, "y,x,g\n1,0,a\n2,1,b\n")
        with pytest.raises(DatasetIngestException, match="'Days'"):
            ingest_csv(path, "y", "g", ["Days"])

    def test_non_numeric_cell_reports_line(self, tmp_path):
        path = self._write(tmp_path, "y,x,g\n1,0,a\n2,oops,b\n")
        with pytest.raises(DatasetIngestException, match="'oops'.*'x'.*line 3"):
            ingest_csv(path, "y", "g", ["x"])

    def test_empty_dataset(self, tmp_path):
        path = self._write(tmp_path, "y,x,g\n")
        with pytest.raises(DatasetIngestException):
            ingest_csv(path, "y", "g", ["x"])

    def test_group_labels_are_opaque_strings(self, tmp_path):
        path = self._write(tmp_path, "y,x,g\n1,0,007\n2,1,7\n3,2,007\n")
        dataset = ingest_csv(path, "y", "g", ["x"])
        assert dataset.label_table.labels == ("007", "7")

    def test_write_then_ingest_reproduces_raw(self, tmp_path):
        rng = np.random.default_rng(11)
        raw = rng.normal(300, 50, size=40)
        dataset = build_dataset(rng.uniform(size=(40, 2)), raw, [str(g) for g in rng.integers(0, 5, 40)],
                                covariate_names=("a", "b"), response_name="y", group_name="g")
        path = write_dataset_csv(dataset, tmp_path / "out.csv")
        again = ingest_csv(path, "y", "g", ["a", "b"])
        np.testing.assert_allclose(again.raw_response, raw, rtol=1e-10)
        np.testing.assert_allclose(again.covariates, dataset.covariates, rtol=1e-12)
        assert list(dataset_to_frame(again).columns) == ["a", "b", "y", "g"]
