from pathlib import Path
from shutil import copy

from setuptools import find_packages, setup

root = Path(__file__).parent

with open(root / "README.md") as f:
    long_description = f.read()
with open(root / "requirements-minimal.txt") as f:
    install_requires = f.readlines()
with open(root / "requirements-testing.txt") as f:
    testing_suite_dependencies = f.readlines()

# Create a local copy for the desk-scale test configuration file based on the master file
desk_scale_config_file_base = Path("./base_desk_scale_test_config.json")
desk_scale_config_file_local = Path("./tests/test_desk_scale/desk_scale_test_config.json")
if not desk_scale_config_file_local.exists():
    copy(src=desk_scale_config_file_base, dst=desk_scale_config_file_local)

setup(
    name="fedpowerctl",
    version="0.1.0",
    description="Federated deep reinforcement learning for downlink power control in multi-cell networks.",
    long_description=long_description,
    long_description_content_type="text/markdown",
    keywords=["power control", "federated learning", "reinforcement learning", "wmmse"],
    license_files=("license.txt",),
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    include_package_data=True,  # Includes the json schemas shipped inside the package.
    package_data={"fedpowerctl": ["schemas/*.json"]},
    python_requires=">=3.8",
    install_requires=install_requires,
    extras_require=dict(test=testing_suite_dependencies),
    entry_points={
        "console_scripts": [
            "fedpowerctl = fedpowerctl.tools.experiment_specification.experiment_specification:fedpowerctl_cli",
        ],
    },
    license="BSD-3-Clause",
)
