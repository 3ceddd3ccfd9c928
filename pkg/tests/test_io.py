import numpy as np
import pytest

from cla.errors import (
    DimensionError,
    FileFormatError,
    ParseError,
    ValidationError,
)
from cla.io import (
    DatasetManifest,
    load_dataset,
    load_labels,
    load_manifest,
    load_matrix,
    load_model,
    save_dataset,
    save_labels,
    save_manifest,
    save_matrix,
    save_model,
)
from cla.model import evolve, fit_dataset
from cla.synthetic import SyntheticConfig, generate_synthetic


def tiny_dataset(seed=0, noise=0.2):
    return generate_synthetic(
        SyntheticConfig(
            feature_dim=5, k_seen=4, k_unseen=2, samples_per_class=3,
            n_spaces=2, semantic_dim=3, noise=noise, seed=seed,
        )
    )


class TestMatrixFormats:
    def test_csv_scalar(self, tmp_path):
        p = tmp_path / "m.csv"
        p.write_text("3.5\n")
        assert np.array_equal(load_matrix(p), [[3.5]])

    def test_csv_round_trip_exact_values(self, tmp_path):
        rng = np.random.default_rng(1)
        m = rng.standard_normal((4, 3))
        p = tmp_path / "m.csv"
        save_matrix(m, p)
        assert np.array_equal(load_matrix(p), m)

    def test_binary_round_trip_bitwise(self, tmp_path):
        rng = np.random.default_rng(2)
        m = rng.standard_normal((7, 3))
        p = tmp_path / "m.clam"
        save_matrix(m, p)
        loaded = load_matrix(p)
        assert loaded.tobytes() == m.tobytes()

    def test_binary_write_deterministic(self, tmp_path):
        rng = np.random.default_rng(3)
        m = rng.standard_normal((5, 5))
        p1, p2 = tmp_path / "a.clam", tmp_path / "b.clam"
        save_matrix(m, p1)
        save_matrix(m, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_ragged_csv_names_line(self, tmp_path):
        p = tmp_path / "bad.csv"
        p.write_text("1,2\n3\n")
        with pytest.raises(ParseError) as err:
            load_matrix(p)
        assert err.value.line == 2

    def test_non_finite_rejected(self, tmp_path):
        p = tmp_path / "inf.csv"
        p.write_text("1,inf\n")
        with pytest.raises(ValidationError):
            load_matrix(p)

    def test_bad_magic(self, tmp_path):
        p = tmp_path / "bad.clam"
        p.write_bytes(b"NOPE" + bytes(40))
        with pytest.raises(FileFormatError, match="magic"):
            load_matrix(p)

    def test_bad_version(self, tmp_path):
        p = tmp_path / "bad.clam"
        p.write_bytes(b"CLAM" + bytes([9]) + bytes(16))
        with pytest.raises(FileFormatError, match="version"):
            load_matrix(p)

    def test_truncated_payload(self, tmp_path):
        rng = np.random.default_rng(4)
        p = tmp_path / "m.clam"
        save_matrix(rng.standard_normal((4, 4)), p)
        p.write_bytes(p.read_bytes()[:-8])
        with pytest.raises(FileFormatError, match="truncated"):
            load_matrix(p)

    def test_labels_round_trip(self, tmp_path):
        p = tmp_path / "labels.csv"
        save_labels(np.array([0, 2, 1, 2]), p)
        assert np.array_equal(load_labels(p), [0, 2, 1, 2])

    def test_non_integer_labels_rejected(self, tmp_path):
        p = tmp_path / "labels.csv"
        p.write_text("0.5,1\n")
        with pytest.raises(ValidationError):
            load_labels(p)


class TestManifest:
    def test_round_trip(self, tmp_path):
        manifest = DatasetManifest(
            k_seen=4, k_unseen=2, feature_dim=5,
            seen_features="xs.clam", seen_labels="ys.csv",
            unseen_features="xu.clam",
            semantic_spaces=(("att", "att_s.clam", "att_u.clam"),),
            unseen_truth="truth.csv",
        )
        p = tmp_path / "manifest.txt"
        save_manifest(manifest, p)
        assert load_manifest(p) == manifest

    def test_missing_key_rejected(self, tmp_path):
        p = tmp_path / "manifest.txt"
        p.write_text("k_seen = 2\n")
        with pytest.raises(ValidationError, match="missing"):
            load_manifest(p)

    def test_requires_semantic_space(self, tmp_path):
        p = tmp_path / "manifest.txt"
        p.write_text(
            "k_seen = 2\nk_unseen = 2\nfeature_dim = 3\n"
            "seen_features = a\nseen_labels = b\nunseen_features = c\n"
        )
        with pytest.raises(ValidationError, match="semantic_space"):
            load_manifest(p)


class TestDatasetRoundTrip:
    def test_minimal_dataset_loads(self, tmp_path):
        ds = tiny_dataset()
        manifest_path = save_dataset(ds, tmp_path / "ds")
        loaded = load_dataset(manifest_path)
        assert np.array_equal(loaded.seen_features, ds.seen_features)
        assert np.array_equal(loaded.seen_labels, ds.seen_labels)
        assert np.array_equal(loaded.unseen_truth, ds.unseen_truth)
        assert loaded.space_names == ds.space_names

    def test_wrong_semantic_columns_names_file(self, tmp_path):
        ds = tiny_dataset()
        manifest_path = save_dataset(ds, tmp_path / "ds")
        bad = ds.semantic_spaces[0].seen[:, :-1]
        save_matrix(bad, tmp_path / "ds" / "space0_seen.clam")
        with pytest.raises(DimensionError, match="space0_seen"):
            load_dataset(manifest_path)

    def test_awa_shaped_manifest_loads(self, tmp_path):
        # zero-filled files with the published AwA shapes
        d, k_s, k_u, att = 1024, 40, 10, 85
        out = tmp_path / "awa"
        out.mkdir()
        save_matrix(np.zeros((d, k_s)), out / "xs.clam")
        save_labels(np.arange(k_s), out / "ys.csv")
        save_matrix(np.zeros((d, k_u)), out / "xu.clam")
        save_matrix(np.zeros((att, k_s)), out / "att_s.clam")
        save_matrix(np.zeros((att, k_u)), out / "att_u.clam")
        manifest = DatasetManifest(
            k_seen=k_s, k_unseen=k_u, feature_dim=d,
            seen_features="xs.clam", seen_labels="ys.csv",
            unseen_features="xu.clam",
            semantic_spaces=(("att", "att_s.clam", "att_u.clam"),),
        )
        save_manifest(manifest, out / "manifest.txt")
        ds = load_dataset(out / "manifest.txt")
        assert ds.feature_dim == 1024
        assert ds.k_seen == 40 and ds.k_unseen == 10
        assert ds.semantic_spaces[0].seen.shape == (85, 40)


class TestModelPersistence:
    def test_round_trip_preserves_predictions(self, tmp_path):
        ds = tiny_dataset(seed=5)
        model = fit_dataset(ds)
        path = tmp_path / "model.claz"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.lam == model.lam
        assert loaded.source_names == model.source_names
        assert np.array_equal(loaded.beta, model.beta)
        assert np.array_equal(loaded.a_s, model.a_s)
        assert np.array_equal(loaded.fused_w_s, model.fused_w_s)
        before = evolve(model, ds, p_total=3)
        after = evolve(loaded, ds, p_total=3)
        assert len(before) == len(after)
        for a, b in zip(before, after):
            assert np.array_equal(a.estimated_labels, b.estimated_labels)
            assert np.array_equal(a.score_matrix, b.score_matrix)

    def test_save_is_bitwise_deterministic(self, tmp_path):
        ds = tiny_dataset(seed=6)
        model = fit_dataset(ds)
        p1, p2 = tmp_path / "a.claz", tmp_path / "b.claz"
        save_model(model, p1)
        save_model(model, p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_truncated_model_errors(self, tmp_path):
        ds = tiny_dataset(seed=7)
        model = fit_dataset(ds)
        path = tmp_path / "model.claz"
        save_model(model, path)
        blob = path.read_bytes()
        for cut in (4, 12, 20, len(blob) // 2, len(blob) - 3):
            path.write_bytes(blob[:cut])
            with pytest.raises(FileFormatError):
                load_model(path)

    def test_wrong_magic_names_it(self, tmp_path):
        path = tmp_path / "model.claz"
        path.write_bytes(b"WHAT" + bytes(60))
        with pytest.raises(FileFormatError, match="CLAZ"):
            load_model(path)

    def test_unsupported_version(self, tmp_path):
        ds = tiny_dataset(seed=8)
        model = fit_dataset(ds)
        path = tmp_path / "model.claz"
        save_model(model, path)
        blob = bytearray(path.read_bytes())
        blob[4] = 2
        path.write_bytes(bytes(blob))
        with pytest.raises(FileFormatError, match="version"):
            load_model(path)
