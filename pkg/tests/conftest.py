"""Session fixtures: a toy pipeline config, synthetic sources, one executed dataset."""

from __future__ import annotations

import time

import pytest

from artifactkit.model import AdfeConfig, RmvitConfig, init_params
from artifactkit.pipeline import PipelineConfig, execute_plan, plan_stages, read_manifest
from artifactkit.sources import natural_clip, write_synthetic_sources

TOY = dict(
    n_hd_sources=3,
    n_hfr_sources=3,
    n_ugc_sources=3,
    patches_per_source=2,
    source_repeats=2,
    nonsource_repeats=2,
    qp_list=(32, 47),
    patch_size=(64, 64, 16),
    hfr_len=128,
    master_seed=7,
)


@pytest.fixture(scope="session")
def toy_config():
    return PipelineConfig(**TOY)


@pytest.fixture(scope="session")
def toy_sources(toy_config, tmp_path_factory):
    root = tmp_path_factory.mktemp("sources")
    inventory = write_synthetic_sources(root, toy_config, seed=11)
    return root, inventory


@pytest.fixture(scope="session")
def build_timings():
    """Wall-clock seconds of expensive session builds, keyed by fixture name."""
    return {}


@pytest.fixture(scope="session")
def toy_dataset(toy_config, toy_sources, tmp_path_factory, build_timings):
    """The 168-patch toy dataset, fully synthesized once per session."""
    _, inventory = toy_sources
    out = tmp_path_factory.mktemp("dataset")
    started = time.perf_counter()
    records = plan_stages(toy_config, inventory)
    report = execute_plan(records, inventory, out, toy_config, jobs=2)
    build_timings["toy_dataset"] = time.perf_counter() - started
    return out, read_manifest(report.manifest_path)


@pytest.fixture(scope="session")
def default_params():
    return init_params(0, AdfeConfig(), RmvitConfig())


@pytest.fixture(scope="session")
def natural64():
    return natural_clip(64, 64, 8, seed=5)
