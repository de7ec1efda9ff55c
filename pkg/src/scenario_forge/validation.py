"""Schema validation of emitted XML against bundled XSD subsets."""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

from lxml import etree

OPENDRIVE_XSD = "opendrive_1_4_subset.xsd"
OPENSCENARIO_XSD = "openscenario_1_0_subset.xsd"


@lru_cache(maxsize=None)
def _schema(name: str) -> etree.XMLSchema:
    with resources.files("scenario_forge.schemas").joinpath(name).open("rb") as fh:
        return etree.XMLSchema(etree.parse(fh))


def _validate(data: bytes, name: str) -> list[str]:
    try:
        doc = etree.fromstring(data)
    except etree.XMLSyntaxError as exc:
        return [f"not well-formed: {exc}"]
    schema = _schema(name)
    if schema.validate(doc):
        return []
    return [f"line {e.line}: {e.message}" for e in schema.error_log]


def validate_opendrive(data: bytes) -> list[str]:
    return _validate(data, OPENDRIVE_XSD)


def validate_openscenario(data: bytes) -> list[str]:
    return _validate(data, OPENSCENARIO_XSD)
