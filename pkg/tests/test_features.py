import numpy as np
import pytest

from scatterkit import (FormatError, ParameterError, Standardizer,
                        apply_standardizer, fit_standardizer, read_features,
                        write_features)
from scatterkit.features import read_standardizer, write_standardizer


def test_fit_constant_column_flagged():
    train = np.array([[0.0, 2.0], [2.0, 2.0]])
    s = fit_standardizer(train)
    assert np.array_equal(s.mean, [1.0, 2.0])
    assert s.inv_std[0] == 1.0
    assert s.inv_std[1] == 0.0
    assert list(s.constant_columns) == [1]


def test_fit_needs_two_rows():
    with pytest.raises(ParameterError):
        fit_standardizer(np.ones((1, 4)))


def test_fit_matches_two_pass_oracle(rng):
    X = rng.standard_normal((100, 50)) * rng.uniform(0.1, 10, 50)
    s = fit_standardizer(X)
    mean = np.array([X[:, c].sum() / 100 for c in range(50)])
    var = np.array([((X[:, c] - mean[c]) ** 2).sum() / 100 for c in range(50)])
    assert np.abs(s.mean - mean).max() < 1e-10
    assert np.abs(s.inv_std - 1 / np.sqrt(var)).max() < 1e-10


def test_apply_standardizes_train(rng):
    X = rng.standard_normal((64, 9)) * 3 + 5
    Z = apply_standardizer(fit_standardizer(X), X)
    assert np.abs(Z.mean(axis=0)).max() < 1e-9
    assert np.abs(Z.var(axis=0) - 1).max() < 1e-6


def test_standardize_then_fit_idempotent(rng):
    X = rng.standard_normal((20, 6)) * 7
    Z = apply_standardizer(fit_standardizer(X), X)
    s2 = fit_standardizer(Z)
    assert np.abs(s2.mean).max() < 1e-9
    assert np.abs(s2.inv_std - 1).max() < 1e-6


def test_apply_identity_and_inverse(rng):
    v = rng.standard_normal(8)
    ident = Standardizer(mean=np.zeros(8), inv_std=np.ones(8))
    assert np.array_equal(apply_standardizer(ident, v), v)
    X = rng.standard_normal((10, 8))
    s = fit_standardizer(X)
    z = apply_standardizer(s, v)
    back = z / s.inv_std + s.mean
    assert np.abs(back - v).max() < 1e-10


def test_apply_mean_gives_zero(rng):
    X = rng.standard_normal((10, 5))
    s = fit_standardizer(X)
    assert np.abs(apply_standardizer(s, s.mean)).max() == 0.0


def test_apply_length_mismatch(rng):
    s = fit_standardizer(rng.standard_normal((4, 5)))
    with pytest.raises(ParameterError):
        apply_standardizer(s, np.zeros(6))


@pytest.mark.parametrize("seed", range(4))
def test_features_roundtrip_bit_exact(tmp_path, seed):
    rng = np.random.default_rng(seed)
    rows, width = int(rng.integers(1, 30)), int(rng.integers(1, 40))
    X = (rng.standard_normal((rows, width)) *
         10.0 ** rng.integers(-30, 31)).astype(np.float32)
    labels = rng.integers(0, 5, rows).astype(np.uint32) if seed % 2 else None
    table = f"table seed={seed}\nwith two lines\n"
    p = tmp_path / "f.scf1"
    write_features(p, table, X, labels)
    t2, X2, l2 = read_features(p)
    assert t2 == table
    assert X2.dtype == np.float32 and np.array_equal(X, X2)
    if labels is None:
        assert l2 is None
    else:
        assert l2.dtype == np.uint32 and np.array_equal(labels, l2)


def test_features_empty_matrix(tmp_path):
    p = tmp_path / "e.scf1"
    write_features(p, "empty\n", np.zeros((0, 12), dtype=np.float32))
    table, X, labels = read_features(p)
    assert X.shape == (0, 12)
    assert labels is None


def test_features_truncated_names_offset(tmp_path):
    p = tmp_path / "t.scf1"
    write_features(p, "x\n", np.ones((3, 4), dtype=np.float32),
                   np.zeros(3, dtype=np.uint32))
    blob = p.read_bytes()
    p.write_bytes(blob[:-5])
    with pytest.raises(FormatError) as err:
        read_features(p)
    assert err.value.offset is not None
    assert "offset" in str(err.value)


def test_features_bad_magic(tmp_path):
    p = tmp_path / "b.scf1"
    p.write_bytes(b"NOPE" + b"\0" * 40)
    with pytest.raises(FormatError) as err:
        read_features(p)
    assert err.value.offset == 0


def test_features_trailing_bytes(tmp_path):
    p = tmp_path / "tr.scf1"
    write_features(p, "x\n", np.ones((2, 2), dtype=np.float32))
    p.write_bytes(p.read_bytes() + b"\0")
    with pytest.raises(FormatError):
        read_features(p)


def test_features_bad_version(tmp_path):
    p = tmp_path / "v.scf1"
    write_features(p, "x\n", np.ones((1, 1), dtype=np.float32))
    blob = bytearray(p.read_bytes())
    blob[4] = 99
    p.write_bytes(bytes(blob))
    with pytest.raises(FormatError) as err:
        read_features(p)
    assert err.value.offset == 4


def test_standardizer_roundtrip(tmp_path, rng):
    X = rng.standard_normal((8, 6))
    X[:, 2] = 3.0
    s = fit_standardizer(X)
    p = tmp_path / "s.scs1"
    write_standardizer(p, s)
    s2 = read_standardizer(p)
    assert np.array_equal(s.mean, s2.mean)
    assert np.array_equal(s.inv_std, s2.inv_std)
    assert s.epsilon == s2.epsilon
    assert np.array_equal(s.constant_columns, s2.constant_columns)


def test_standardizer_file_trailing(tmp_path, rng):
    p = tmp_path / "s.scs1"
    write_standardizer(p, fit_standardizer(rng.standard_normal((4, 3))))
    p.write_bytes(p.read_bytes() + b"xy")
    with pytest.raises(FormatError):
        read_standardizer(p)
