"""
This module is meant for the tests to be run as stand-alone so as to emulate a fresh import.

Run them by using:
pytest tests/imports.py::TestImportStructure::test_name
"""

from unittest import TestCase


def _strip_magic_module_attributes(ls: list) -> list:
    exclude_keys = [
        "__name__",
        "__doc__",
        "__package__",
        "__loader__",
        "__spec__",
        "__path__",
        "__file__",
        "__cached__",
        "__builtins__",
    ]
    return list(filter(lambda key: key not in exclude_keys, ls))


class TestImportStructure(TestCase):
    def test_top_level(self):
        import fedpowerctl

        current_structure = _strip_magic_module_attributes(ls=fedpowerctl.__dict__)
        expected_structure = [
            # Sub-packages
            "baselines",
            "environment",
            "learning",
            "tools",
            "utils",  # Attached to namespace by the environment import
            # Exposed attributes
            "brute_force_power",
            "max_power",
            "wmmse",
            "EnvConfig",
            "PowerControlEnv",
            "TopologyConfig",
            "AgentConfig",
            "AggregationPlan",
            "fedavg",
            "run_centralized",
            "run_distributed",
            "run_federated",
            "ExperimentConfig",
            "load_experiment_config",
            "run_experiment",
        ]
        self.assertCountEqual(first=current_structure, second=expected_structure)

    def test_tools(self):
        """Python dir() calls (and __dict__ as well) update dynamically based on global imports."""
        from fedpowerctl import tools

        current_structure = _strip_magic_module_attributes(ls=tools.__dict__)
        expected_structure = [
            # Sub-packages
            "experiment_specification",
            # Sub-modules
            "signal_processing",  # Attached to namespace by the experiment specification import
            # Functions imported on the __init__
            "load_experiment_config",
            "run_experiment",
            "convergence_episode",
            "smooth",
        ]
        self.assertCountEqual(first=current_structure, second=expected_structure)

    def test_learning(self):
        from fedpowerctl import learning

        current_structure = _strip_magic_module_attributes(ls=learning.__dict__)
        self.assertIn(member="agents", container=current_structure)
        self.assertIn(member="federation", container=current_structure)
        self.assertIn(member="nn", container=current_structure)
        self.assertIn(member="run_federated", container=current_structure)
