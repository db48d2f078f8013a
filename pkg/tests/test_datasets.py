import numpy as np
import pytest

from sharpbfgs.datasets import (
    DATASET_MU,
    Dataset,
    EmptyDataset,
    ParseError,
    normalize_rows,
    parse_libsvm,
    synth_logistic,
    synth_quadratic,
    write_libsvm,
)


class TestParseLibsvm:
    def test_basic_line(self, tmp_path):
        path = tmp_path / "toy.libsvm"
        path.write_text("+1 1:0.5 3:0.5\n")
        ds = parse_libsvm(path)
        assert ds.n_samples == 1 and ds.dim == 3
        np.testing.assert_allclose(ds.rows[0], [0.5, 0.0, 0.5])
        assert ds.labels[0] == 1.0

    def test_label_conventions(self, tmp_path):
        cases = {
            "-1 1:1\n+1 1:1\n": [-1.0, 1.0],
            "0 1:1\n1 1:1\n": [-1.0, 1.0],
            "1 1:1\n2 1:1\n": [-1.0, 1.0],
        }
        for text, expected in cases.items():
            path = tmp_path / "labels.libsvm"
            path.write_text(text)
            np.testing.assert_array_equal(parse_libsvm(path).labels, expected)

    def test_rejects_mixed_labels(self, tmp_path):
        path = tmp_path / "bad.libsvm"
        path.write_text("3 1:1\n7 1:1\n")
        with pytest.raises(ParseError):
            parse_libsvm(path)

    def test_malformed_lines_carry_line_numbers(self, tmp_path):
        path = tmp_path / "bad.libsvm"
        path.write_text("+1 1:0.5\n+1 notafeature\n")
        with pytest.raises(ParseError) as exc:
            parse_libsvm(path)
        assert exc.value.line_no == 2

        path.write_text("+1 1:0.5\n+1 2:0.1 1:0.2\n")
        with pytest.raises(ParseError) as exc:
            parse_libsvm(path)
        assert exc.value.line_no == 2
        assert "ascending" in exc.value.reason

        path.write_text("+1 0:0.5\n")
        with pytest.raises(ParseError) as exc:
            parse_libsvm(path)
        assert "1-based" in exc.value.reason

        path.write_text("spam 1:0.5\n")
        with pytest.raises(ParseError) as exc:
            parse_libsvm(path)
        assert "label" in exc.value.reason

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.libsvm"
        path.write_text("\n\n")
        with pytest.raises(EmptyDataset):
            parse_libsvm(path)

    def test_dim_override(self, tmp_path):
        path = tmp_path / "toy.libsvm"
        path.write_text("+1 1:1.0\n")
        assert parse_libsvm(path, dim=4).dim == 4
        with pytest.raises(ParseError):
            parse_libsvm(path, dim=0)

    def test_benchmark_shape_fixture(self, tmp_path):
        # Generated fixture with the documented svmguide3 shape (1243 x 21).
        rng = np.random.default_rng(0)
        path = tmp_path / "svmguide3.t"
        with open(path, "w") as fh:
            for i in range(1243):
                label = "+1" if rng.random() < 0.5 else "-1"
                idx = sorted(rng.choice(21, size=rng.integers(1, 6), replace=False) + 1)
                if i == 0:
                    idx = [21]
                feats = " ".join(f"{j}:{rng.uniform(0.1, 2.0):.6f}" for j in idx)
                fh.write(f"{label} {feats}\n")
        ds = parse_libsvm(path)
        assert (ds.n_samples, ds.dim) == (1243, 21)

    def test_round_trip_dense_matrices(self, tmp_path, rng):
        rows = rng.standard_normal((6, 4))
        rows[2, 1] = 0.0
        labels = np.where(rng.random(6) < 0.5, -1.0, 1.0)
        ds = Dataset(name="t", rows=rows, labels=labels)
        path = tmp_path / "rt.libsvm"
        write_libsvm(ds, path)
        back = parse_libsvm(path, dim=4)
        np.testing.assert_array_equal(back.rows, rows)
        np.testing.assert_array_equal(back.labels, labels)

    def test_mu_defaults_table(self):
        assert DATASET_MU["svmguide3"] == 0.01
        assert DATASET_MU["w8a"] == 0.0001
        assert len(DATASET_MU) == 8


class TestNormalizeRows:
    def test_three_four_five(self):
        ds = Dataset("t", np.array([[3.0, 4.0]]), np.array([1.0]))
        out = normalize_rows(ds)
        np.testing.assert_allclose(out.rows[0], [0.6, 0.8])

    def test_unit_row_unchanged(self):
        row = np.array([[1.0, 0.0]])
        out = normalize_rows(Dataset("t", row, np.array([1.0])))
        assert abs(out.rows[0, 0] - 1.0) <= 1e-15

    def test_all_norms_unit_after(self, rng):
        rows = rng.standard_normal((50, 7)) * rng.uniform(0.1, 9.0, (50, 1))
        out = normalize_rows(Dataset("t", rows, np.ones(50)))
        np.testing.assert_allclose(np.linalg.norm(out.rows, axis=1), 1.0, atol=1e-10)

    def test_zero_rows_dropped_with_warning(self, caplog):
        rows = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]])
        with caplog.at_level("WARNING"):
            out = normalize_rows(Dataset("t", rows, np.array([1.0, -1.0, 1.0])))
        assert out.n_samples == 2
        np.testing.assert_array_equal(out.labels, [1.0, 1.0])
        assert "1 zero rows" in caplog.text


class TestSynthQuadratic:
    def test_kappa_one_is_identity(self):
        problem = synth_quadratic(5, 1.0, seed=3)
        np.testing.assert_array_equal(problem.a.a, np.eye(5))

    def test_seeded_determinism(self):
        p1 = synth_quadratic(12, 30.0, seed=9)
        p2 = synth_quadratic(12, 30.0, seed=9)
        np.testing.assert_array_equal(p1.a.a, p2.a.a)
        np.testing.assert_array_equal(p1.b, p2.b)

    def test_extreme_eigenvalues_pinned(self):
        problem = synth_quadratic(20, 100.0, seed=1)
        evals = np.linalg.eigvalsh(problem.a.a)
        assert evals[0] == pytest.approx(1.0, abs=1e-8)
        assert evals[-1] == pytest.approx(100.0, rel=1e-8)
        assert problem.mu == 1.0 and problem.lip == 100.0

    def test_rejects_bad_arguments(self):
        with pytest.raises(ValueError):
            synth_quadratic(1, 10.0, seed=0)
        with pytest.raises(ValueError):
            synth_quadratic(5, 0.5, seed=0)


class TestSynthLogistic:
    def test_shapes_and_unit_rows(self):
        ds = synth_logistic(100, 8, seed=4)
        assert ds.rows.shape == (100, 8)
        np.testing.assert_allclose(np.linalg.norm(ds.rows, axis=1), 1.0, atol=1e-12)
        assert set(np.unique(ds.labels)) <= {-1.0, 1.0}

    def test_seeded_determinism(self):
        a = synth_logistic(50, 5, seed=2)
        b = synth_logistic(50, 5, seed=2)
        np.testing.assert_array_equal(a.rows, b.rows)
        np.testing.assert_array_equal(a.labels, b.labels)

    def test_both_classes_present(self):
        ds = synth_logistic(200, 6, seed=0)
        assert (ds.labels == 1.0).any() and (ds.labels == -1.0).any()
