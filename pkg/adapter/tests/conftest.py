import os

import pytest
from fastapi.testclient import TestClient

from vidadapter.config import AdapterConfig
from vidadapter.server import create_app

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))
FIXTURE_DIR = os.path.join(REPO_ROOT, "fixtures", "video")
WIRE_GOLDEN = os.path.join(REPO_ROOT, "fixtures", "wire", "cases.json")


@pytest.fixture()
def client():
    app = create_app(AdapterConfig.stub_only(FIXTURE_DIR))
    with TestClient(app) as c:
        yield c
