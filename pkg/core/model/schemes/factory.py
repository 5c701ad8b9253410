# core/model/schemes/factory.py
from __future__ import annotations

from typing import Dict, Type

from core.errors import ConfigurationError
from core.model.types import normalize_scheme
from .base_scheme import CombinationScheme
from .builtin import AdditiveScheme, ArithmeticMeanScheme, GeometricMeanScheme

_REGISTRY: Dict[str, Type[CombinationScheme]] = {
    cls.name: cls for cls in (AdditiveScheme, ArithmeticMeanScheme, GeometricMeanScheme)
}


class SchemeFactory:
    @staticmethod
    def get(scheme_name: str) -> CombinationScheme:
        """Returns the registered scheme; aliases (sum/arithmetic/geometric) are accepted."""
        key = normalize_scheme(scheme_name)
        try:
            return _REGISTRY[key]()
        except KeyError:
            raise ConfigurationError(f"No combination scheme registered as '{key}'", key="model.scheme")
