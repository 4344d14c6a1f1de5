"""Conversion des rapports en données JSON (NaN/inf -> None, numpy -> Python)."""

import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
from pydantic import ValidationError

from app.errors import GameInputError


def clean_nan(data):
    """Remplace récursivement tous les NaN par None."""
    if isinstance(data, dict):
        return {key: clean_nan(value) for key, value in data.items()}
    elif isinstance(data, (list, tuple)):
        return [clean_nan(item) for item in data]
    elif isinstance(data, np.ndarray):
        return clean_nan(data.tolist())
    elif isinstance(data, (np.bool_,)):
        return bool(data)
    elif isinstance(data, (np.integer,)):
        return int(data)
    elif isinstance(data, (float, np.floating)):
        data = float(data)
        if math.isnan(data) or math.isinf(data):
            return None
        return data
    elif isinstance(data, Fraction):
        return f"{data.numerator}/{data.denominator}"
    else:
        return data


def load_document(model_cls, document):
    """
    Valide un document JSON (texte, dict ou chemin) contre un schéma pydantic.

    Args:
        model_cls: classe pydantic du document
        document: texte JSON, dict déjà décodé, ou chemin de fichier

    Returns:
        instance validée
    """
    if isinstance(document, Path):
        document = document.read_text(encoding="utf-8")
    if isinstance(document, (str, bytes)):
        try:
            document = json.loads(document)
        except json.JSONDecodeError as e:
            raise GameInputError(f"JSON invalide: {e}")
    try:
        return model_cls.model_validate(document)
    except ValidationError as e:
        raise GameInputError(f"violation du schéma: {e}")
