from pathlib import Path

import pytest

from lcmteval import load_campaign

FIXTURE_CONFIG = Path(__file__).parent / "fixtures" / "campaign" / "campaign.conf"


@pytest.fixture(scope="session")
def fixture_config_path() -> Path:
    return FIXTURE_CONFIG


@pytest.fixture(scope="session")
def campaign():
    return load_campaign(FIXTURE_CONFIG)
