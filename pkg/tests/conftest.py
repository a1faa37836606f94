import random

import pytest

from ompworld.gateway import Gateway, Journal, ModelEndpoint
from ompworld.types import CaliperProfile, RaceFinding, RaceReport

DATA_DIR = __file__.rsplit("/", 1)[0] + "/data"

FILE_NAMES = ("generated.cc", "harness.cc", "kernel.cpp", "util.h")
REGION_LABELS = ("region_3_9", "region_12_20", "region_4_4", "region_1_30")
THREAD_COUNT_POOL = (1, 2, 4, 8, 16, 32, 64, 128)


def random_race_report(rng: random.Random) -> RaceReport:
    findings = []
    for _ in range(rng.randint(0, 4)):
        locations = tuple(
            (rng.choice(FILE_NAMES), rng.randint(1, 500))
            for _ in range(rng.randint(1, 3))
        )
        findings.append(RaceFinding(
            race_type=rng.choice(("read_write", "write_write")),
            code_locations=locations,
        ))
    from ompworld.answers import canonicalize_race_report
    return canonicalize_race_report(findings)


def random_caliper_profile(rng: random.Random) -> CaliperProfile:
    regions = rng.sample(REGION_LABELS, rng.randint(1, 3))
    counts = tuple(sorted(rng.sample(THREAD_COUNT_POOL, rng.randint(1, 4))))
    entries = {}
    for region in regions:
        for tc in counts:
            if rng.random() < 0.1:
                entries[(region, tc)] = None
            else:
                entries[(region, tc)] = round(rng.uniform(0.0, 100.0), 2)
    return CaliperProfile(entries=entries, thread_counts=counts)


@pytest.fixture
def journal(tmp_path):
    return Journal(tmp_path / "journal")


@pytest.fixture
def endpoint():
    return ModelEndpoint(name="test-model")


def make_gateway(tmp_path, transport, **kwargs):
    kwargs.setdefault("backoff", 0.0)
    return Gateway(Journal(tmp_path / "journal"), transport=transport, **kwargs)
