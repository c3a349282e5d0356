import json
import unittest
from pathlib import Path
from tempfile import mkdtemp

import numpy as np
import yaml

from fedpowerctl.utils import ConfigLoader, ExperimentJSONEncoder, dump_dict_to_json, load_dict_from_file


class TestLoadDictFromFile(unittest.TestCase):
    def setUp(self):
        self.folder = Path(mkdtemp())

    def test_yaml(self):
        file_path = self.folder / "config.yml"
        file_path.write_text("grid_side: 3\nhidden_layers: [32, 16]\nlearning_rate: 0.001\naggregation_period: null\n")

        self.assertEqual(
            load_dict_from_file(file_path),
            dict(grid_side=3, hidden_layers=[32, 16], learning_rate=0.001, aggregation_period=None),
        )

    def test_exponent_floats(self):
        file_path = self.folder / "config.yml"
        file_path.write_text("learning_rate: 1e-3\nreward_scale: 5E-2\nwmmse_tol: 1.0e-5\nseed: 7\nstart: 2024-01-01\n")

        loaded = load_dict_from_file(file_path)

        expected = dict(learning_rate=0.001, reward_scale=0.05, wmmse_tol=1e-5, seed=7, start="2024-01-01")
        self.assertEqual(loaded, expected)
        self.assertIsInstance(loaded["learning_rate"], float)
        self.assertIsInstance(loaded["seed"], int)

    def test_loader_leaves_safe_loader_untouched(self):
        self.assertEqual(yaml.safe_load("value: 1e-3"), dict(value="1e-3"))
        self.assertEqual(yaml.load("value: 1e-3", Loader=ConfigLoader), dict(value=0.001))

    def test_json(self):
        file_path = self.folder / "config.json"
        file_path.write_text(json.dumps(dict(mode="centralized", seed=4)))

        self.assertEqual(load_dict_from_file(file_path), dict(mode="centralized", seed=4))

    def test_empty_yaml(self):
        file_path = self.folder / "empty.yaml"
        file_path.write_text("")

        self.assertEqual(load_dict_from_file(file_path), dict())

    def test_missing_file(self):
        with self.assertRaisesRegex(FileNotFoundError, "is not a file."):
            load_dict_from_file(self.folder / "missing.yml")

    def test_unsupported_suffix(self):
        file_path = self.folder / "config.toml"
        file_path.write_text("seed = 1\n")

        with self.assertRaisesRegex(ValueError, "is not a valid yaml or .json file."):
            load_dict_from_file(file_path)


class TestDumpDictToJson(unittest.TestCase):
    def test_stable_bytes(self):
        folder = Path(mkdtemp())
        summary = dict(mean_rate_per_user=np.float64(1.25), algorithm="FDQN", comm_overhead=0.01)

        first = dump_dict_to_json(summary, folder / "first" / "summary.json", encoder=ExperimentJSONEncoder)
        reordered = dict(reversed(summary.items()))
        second = dump_dict_to_json(reordered, folder / "second.json", encoder=ExperimentJSONEncoder)

        self.assertEqual(first.read_bytes(), second.read_bytes())
        expected = dict(algorithm="FDQN", comm_overhead=0.01, mean_rate_per_user=1.25)
        self.assertEqual(load_dict_from_file(first), expected)
