import json
from pathlib import Path

import pytest

from app.bundling_agent import BundlingAgent
from app.delegation_agent import DelegationAgent
from app.envelope_agent import EnvelopeAgent
from app.game_model import GameModelAgent

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def model_agent():
    return GameModelAgent()


@pytest.fixture
def load(model_agent):
    """Charge un jeu du dossier fixtures, avec paramètres optionnels."""

    def _load(name, **params):
        return model_agent.load_game(FIXTURES / name, params=params or None)

    return _load


@pytest.fixture
def e1(load):
    return load("e1.json", p="4/5")


@pytest.fixture
def pareto_game(load):
    return load("pareto.json")


@pytest.fixture
def upr_game(load):
    return load("upr-not-upnr.json")


@pytest.fixture
def delegation():
    return DelegationAgent()


@pytest.fixture
def bundling():
    return BundlingAgent()


@pytest.fixture
def envelope():
    return EnvelopeAgent()


@pytest.fixture
def read_json():
    def _read(name):
        return json.loads((FIXTURES / name).read_text(encoding="utf-8"))

    return _read
