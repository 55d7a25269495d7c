import datetime as dt
import os
import sys

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, os.path.dirname(__file__))

from clonedetect.dataset import AccountProfile  # noqa: E402
from clonedetect.synthetic import generate_synthetic  # noqa: E402

settings.register_profile(
    "default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


def make_account(id, username="user", screen_name="User", **kw):
    kw.setdefault("registered_on", dt.date(2020, 1, 1))
    return AccountProfile(id=id, username=username, screen_name=screen_name, **kw)


@pytest.fixture(scope="session")
def small_dataset():
    return generate_synthetic(100, 20, 200, seed=7)
