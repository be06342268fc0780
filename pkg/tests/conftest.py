import json
from fractions import Fraction
from pathlib import Path

import pytest

from latentbn.catalog import get_model
from latentbn.distribution import tensor_from_json
from latentbn.model import parameters_from_json

DATA = Path(__file__).resolve().parents[1] / "data"

# the published 4-3e distribution, blocks (X3, X4) = (1,1), (1,2), (2,1), (2,2),
# each block row-major over (X1, X2)
TABLE2_BLOCKS = [
    ["116/625", "34/625", "27/500", "39/1250"],
    ["32/625", "13/625", "63/2500", "17/1250"],
    ["128/625", "52/625", "171/2500", "24/625"],
    ["44/625", "31/625", "81/2500", "21/1250"],
]

_ACCEPTANCE = {}


def table2_entry(x1, x2, x3, x4):
    """Published P(X1=x1, X2=x2, X3=x3, X4=x4), states 1-based."""
    block = (x3 - 1) * 2 + (x4 - 1)
    return Fraction(TABLE2_BLOCKS[block][(x1 - 1) * 2 + (x2 - 1)])


@pytest.fixture(scope="session")
def model_43e():
    return get_model("4-3e")


@pytest.fixture(scope="session")
def table2_params(model_43e):
    return [
        parameters_from_json(model_43e, json.loads((DATA / f"table2_params{k}.json").read_text()))
        for k in (1, 2)
    ]


@pytest.fixture(scope="session")
def table2_tensor():
    return tensor_from_json(json.loads((DATA / "table2_distribution.json").read_text()))


@pytest.fixture
def acceptance():
    """Record one acceptance verdict; printed in the terminal summary."""

    def record(number, passed, detail):
        _ACCEPTANCE[number] = (bool(passed), detail)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        passed, detail = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {'PASS' if passed else 'FAIL'}  {detail}")
