import numpy as np
import pytest
import torch

from rethinknet.common.errors import (
    DimensionError, ParameterError, ParseError, SchemaError, SizeError, UsageError)
from rethinknet.dataset.arff import load_arff, parse_label_spec, read_label_xml
from rethinknet.dataset.loader import load_dataset
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset, scale_features, stats
from rethinknet.dataset.native import load_native, save_native
from rethinknet.dataset.splits import kfold, n_train_examples, split

from conftest import make_random_dataset

ARFF_HEADER = """% toy data
@relation toy
@attribute f0 numeric
@attribute 'f 1' real
@attribute a {0,1}
@attribute b {0,1}
@data
"""

LABEL_XML = """<?xml version="1.0" encoding="utf-8"?>
<labels xmlns="http://mulan.sourceforge.net/labels">
<label name="b"></label>
<label name="a"></label>
</labels>
"""


class TestArff:
    def test_dense_last_k(self, write_text):
        path = write_text('toy.arff', ARFF_HEADER + "1.0,2.0,1,0\n3.5,-1,0,1\n0,0,1,1\n")
        ds = load_arff(path, 'last_k:2')
        assert (ds.n_examples, ds.n_features, ds.n_labels) == (3, 2, 2)
        np.testing.assert_array_equal(ds.features, [[1.0, 2.0], [3.5, -1.0], [0.0, 0.0]])
        np.testing.assert_array_equal(ds.labels, [[1, 0], [0, 1], [1, 1]])
        assert ds.feature_names == ('f0', 'f 1')
        assert ds.label_names == ('a', 'b')
        assert ds.name == 'toy'

    def test_sparse_row(self, write_text):
        path = write_text('sparse.arff', ARFF_HEADER + "{0 1.5, 3 1}\n{}\n")
        ds = load_arff(path, 'last_k:2')
        np.testing.assert_array_equal(ds.features[0], [1.5, 0.0])
        np.testing.assert_array_equal(ds.labels[0], [0, 1])
        np.testing.assert_array_equal(ds.features[1], [0.0, 0.0])
        np.testing.assert_array_equal(ds.labels[1], [0, 0])

    def test_xml_labels_keep_document_order(self, write_text):
        path = write_text('toy.arff', ARFF_HEADER + "1,2,1,0\n")
        xml = write_text('toy.xml', LABEL_XML)
        assert read_label_xml(xml) == ['b', 'a']
        ds = load_arff(path, f'xml:{xml}')
        assert ds.label_names == ('b', 'a')
        np.testing.assert_array_equal(ds.labels, [[0, 1]])

    def test_unknown_xml_label(self, write_text):
        path = write_text('toy.arff', ARFF_HEADER + "1,2,1,0\n")
        xml = write_text('bad.xml', LABEL_XML.replace('"a"', '"zzz"'))
        with pytest.raises(SchemaError):
            load_arff(path, xml)

    def test_malformed_header_reports_line(self, write_text):
        text = ARFF_HEADER.replace("@attribute b {0,1}", "@atribute b {0,1}")
        path = write_text('bad.arff', text + "1,2,1,0\n")
        with pytest.raises(ParseError) as info:
            load_arff(path, 'last_k:2')
        assert info.value.line == 6

    def test_non_numeric_feature(self, write_text):
        path = write_text('bad.arff', ARFF_HEADER + "1,2,1,0\nx,2,1,0\n")
        with pytest.raises(ParseError) as info:
            load_arff(path, 'last_k:2')
        assert info.value.line == 9

    def test_missing_value_is_an_error(self, write_text):
        path = write_text('bad.arff', ARFF_HEADER + "1,?,1,0\n")
        with pytest.raises(ParseError):
            load_arff(path, 'last_k:2')

    def test_label_must_be_binary_nominal(self, write_text):
        path = write_text('toy.arff', ARFF_HEADER + "1,2,1,0\n")
        with pytest.raises(SchemaError):
            load_arff(path, 'last_k:3')

    def test_unsupported_attribute_type(self, write_text):
        text = ARFF_HEADER.replace("@attribute f0 numeric", "@attribute f0 string")
        path = write_text('bad.arff', text + "1,2,1,0\n")
        with pytest.raises(ParseError) as info:
            load_arff(path, 'last_k:2')
        assert info.value.line == 3

    def test_parse_label_spec(self):
        assert parse_label_spec('last_k:6') == ('last_k', 6)
        assert parse_label_spec('xml:a/b.xml') == ('xml', 'a/b.xml')
        assert parse_label_spec('a/b.xml') == ('xml', 'a/b.xml')
        with pytest.raises(SchemaError):
            parse_label_spec('last_k:zero')


class TestNative:
    def test_example(self, write_text):
        ds = load_native(write_text('one.txt', "1 2 2\n0\t1:0.5"))
        np.testing.assert_array_equal(ds.features, [[0.0, 0.5]])
        np.testing.assert_array_equal(ds.labels, [[1, 0]])

    def test_empty_label_field(self, write_text):
        ds = load_native(write_text('two.txt', "2 2 3\n\t0:1\n0,2\t\n"))
        np.testing.assert_array_equal(ds.labels, [[0, 0, 0], [1, 0, 1]])
        np.testing.assert_array_equal(ds.features, [[1.0, 0.0], [0.0, 0.0]])

    def test_round_trip_is_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        features = rng.normal(size=(20, 5))
        features[features < 0] = 0
        ds = MultiLabelDataset(features, (rng.uniform(size=(20, 4)) < 0.3).astype(np.int8))
        path = tmp_path / 'rt.txt'
        save_native(ds, path)
        loaded = load_native(path)
        assert np.array_equal(loaded.features, ds.features)
        assert np.array_equal(loaded.labels, ds.labels)

    def test_count_mismatch(self, write_text):
        with pytest.raises(ParseError) as info:
            load_native(write_text('bad.txt', "3 2 2\n0\t0:1\n1\t1:1\n"))
        assert info.value.line == 3

    def test_index_out_of_range(self, write_text):
        with pytest.raises(ParseError) as info:
            load_native(write_text('bad.txt', "2 2 2\n0\t0:1\n1\t2:1\n"))
        assert info.value.line == 3
        with pytest.raises(ParseError) as info:
            load_native(write_text('bad.txt', "1 2 2\n2\t0:1\n"))
        assert info.value.line == 2


class TestDataset:
    def test_rejects_non_binary_labels(self):
        with pytest.raises(ParameterError):
            MultiLabelDataset(np.zeros((2, 2)), np.array([[0, 2], [1, 0]]))

    def test_rejects_row_mismatch(self):
        with pytest.raises(DimensionError):
            MultiLabelDataset(np.zeros((3, 2)), np.zeros((2, 2)))

    def test_items(self):
        ds = make_random_dataset(n=5, d=3, k=2)
        item = ds[2]
        assert item['features'].dtype == torch.float64
        assert item['labels'].shape == (2,)
        with pytest.raises(ValueError):
            ds.features[0, 0] = 1.0

    def test_stats(self):
        ds = MultiLabelDataset(np.zeros((2, 1)), np.array([[1, 1, 0], [0, 1, 0]]))
        s = stats(ds)
        assert s.cardinality == pytest.approx(1.5)
        assert s.density == pytest.approx(0.5)
        empty = stats(MultiLabelDataset(np.zeros((3, 1)), np.zeros((3, 2))))
        assert empty.cardinality == 0 and empty.density == 0

    def test_stats_consistency(self):
        s = make_random_dataset(n=50, d=2, k=7).stats()
        assert 0 <= s.density <= 1
        assert s.cardinality == pytest.approx(s.density * s.n_labels, abs=1e-12)


class TestScaling:
    def test_examples(self):
        ds = MultiLabelDataset(np.array([[2.0, 5.0], [4.0, 5.0], [6.0, 5.0]]), np.zeros((3, 1)))
        scaled, normalizer = scale_features(ds)
        np.testing.assert_allclose(scaled.features[:, 0], [0.0, 0.5, 1.0])
        np.testing.assert_array_equal(scaled.features[:, 1], [0.0, 0.0, 0.0])

        test = MultiLabelDataset(np.array([[8.0, 5.0], [0.0, 7.0]]), np.zeros((2, 1)))
        scaled_test, _ = scale_features(test, normalizer)
        np.testing.assert_array_equal(scaled_test.features, [[1.0, 0.0], [0.0, 0.0]])

    def test_range_and_idempotence(self):
        ds = make_random_dataset(n=40, d=6, k=2)
        scaled, _ = scale_features(ds)
        assert scaled.features.min() >= 0 and scaled.features.max() <= 1
        again, _ = scale_features(scaled)
        np.testing.assert_allclose(again.features, scaled.features, rtol=0, atol=1e-12)


class TestSplits:
    def test_sizes(self):
        s = split(8, seed=0)
        assert len(s.train_indices) == 6 and len(s.test_indices) == 2
        assert n_train_examples(10) == 8

    def test_deterministic(self):
        a, b = split(30, seed=5), split(30, seed=5)
        assert np.array_equal(a.train_indices, b.train_indices)
        assert np.array_equal(a.test_indices, b.test_indices)

    def test_seeds_differ(self):
        perms = {tuple(split(100, seed=s).train_indices) for s in range(10)}
        assert len(perms) == 10

    @pytest.mark.parametrize('n', [4, 5, 7, 13, 64, 101])
    def test_disjoint_and_complete(self, n):
        s = split(n, seed=n)
        both = np.concatenate([s.train_indices, s.test_indices])
        assert np.array_equal(np.sort(both), np.arange(n))
        assert len(s.train_indices) == int(np.floor(0.75 * n + 0.5))

    def test_too_small(self):
        with pytest.raises(SizeError):
            split(3, seed=0)

    def test_apply(self):
        ds = make_random_dataset(n=12)
        train, test = split(ds, seed=1).apply(ds)
        assert len(train) == 9 and len(test) == 3

    def test_kfold(self):
        folds = kfold(10, 3, seed=0)
        assert len(folds) == 3
        validation = np.concatenate([v for _, v in folds])
        assert np.array_equal(np.sort(validation), np.arange(10))
        for train_idxs, val_idxs in folds:
            assert len(np.intersect1d(train_idxs, val_idxs)) == 0
            assert len(train_idxs) + len(val_idxs) == 10
        with pytest.raises(SizeError):
            kfold(2, 3)


class TestLoader:
    def test_dispatch_by_extension(self, write_text):
        arff = write_text('toy-train.arff', ARFF_HEADER + "1,2,1,0\n")
        write_text('toy.xml', LABEL_XML)
        ds = load_dataset(arff)
        assert ds.name == 'toy'
        assert ds.label_names == ('b', 'a')
        native = write_text('toy.txt', "1 2 2\n0\t1:0.5\n")
        assert load_dataset(native).n_labels == 2

    def test_arff_needs_labels(self, write_text):
        arff = write_text('lonely.arff', ARFF_HEADER + "1,2,1,0\n")
        with pytest.raises(UsageError):
            load_dataset(arff)

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_dataset(tmp_path / 'nope.arff', label_spec='last_k:2')

    def test_emotions_statistics(self, data_dir):
        from conftest import mulan_file
        ds = load_dataset(mulan_file(data_dir, 'emotions'), label_spec='last_k:6')
        s = ds.stats()
        assert (s.n_examples, s.n_features, s.n_labels) == (593, 72, 6)
        assert s.cardinality == pytest.approx(1.869, abs=1e-3)
        assert s.density == pytest.approx(0.311, abs=1e-3)
