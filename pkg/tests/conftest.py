import json
from pathlib import Path

import pytest

from lobachevsky_ho import verification
from lobachevsky_ho.geometry import params_from_q


@pytest.fixture(scope="session")
def golden():
    doc = verification.load_golden()
    return [rec["E_tilde"] for rec in doc["values"]], doc


@pytest.fixture(scope="session")
def p05():
    return params_from_q(0.5)


def read_json(path):
    return json.loads(Path(path).read_text())
