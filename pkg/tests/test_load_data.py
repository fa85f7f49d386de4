import json

import pytest
import yaml

from utils.ensembles import EnsembleKind
from utils.errors import ConfigError
from utils.load_data import (
    ENSEMBLE_SCHEMA,
    RUN_SCHEMA,
    load_config,
    load_ensemble,
    load_ensemble_document,
    resolve_path,
    validate,
)

LDGM_DOC = {
    "kind": "ldgm",
    "lambda": [0, 0, 0, 0, 0, 0, 0, 0, 1],
    "rho": [{"num": 3, "den": 50}, 0, {"num": 47, "den": 50}],
}


def test_shipped_configs_resolve_by_name():
    assert resolve_path("ldpc36.json") == resolve_path("configs/ldpc36.json")


def test_missing_file():
    with pytest.raises(ConfigError, match="No existe"):
        load_config("configs/no_existe.json")


def test_unsupported_extension(tmp_path):
    path = tmp_path / "ensamble.toml"
    path.write_text("lambda = [0, 0, 1]\n")
    with pytest.raises(ConfigError, match="no soportado"):
        load_config(str(path))


def test_json_and_yaml_agree(tmp_path):
    json_path, yaml_path = tmp_path / "e.json", tmp_path / "e.yaml"
    json_path.write_text(json.dumps(LDGM_DOC))
    yaml_path.write_text(yaml.safe_dump(LDGM_DOC))
    from_json = load_ensemble(str(json_path))
    from_yaml = load_ensemble(str(yaml_path))
    assert from_json == from_yaml
    assert from_json.kind is EnsembleKind.LDGM


def test_broken_yaml(tmp_path):
    path = tmp_path / "roto.yaml"
    path.write_text("lambda: [0, 1\n")
    with pytest.raises(ConfigError, match="No se pudo leer"):
        load_config(str(path))


def test_cached_reads_are_copies():
    first = load_config("configs/ldpc36.json")
    first["lambda"].append(99)
    assert 99 not in load_config("configs/ldpc36.json")["lambda"]


def test_inline_json():
    document = load_ensemble_document('{"lambda": [0, 0, 1], "rho": [0, 0, 0, 0, 0, 1]}')
    assert document["rho"][-1] == 1
    with pytest.raises(ConfigError, match="JSON de ensamble"):
        load_ensemble_document("{lambda: ")


def test_schema_violations():
    with pytest.raises(ConfigError, match="Ensamble inválido"):
        validate({"lambda": [0, 0, 1]}, ENSEMBLE_SCHEMA, "Ensamble")
    with pytest.raises(ConfigError, match="bins"):
        validate({"bins": 1}, RUN_SCHEMA, "Configuración")
    with pytest.raises(ConfigError):
        validate({"desconocida": 1}, RUN_SCHEMA, "Configuración")


def test_degree_one_ldpc_is_a_config_error():
    with pytest.raises(ConfigError):
        load_ensemble({"lambda": [0.2, 0.8], "rho": [0, 0, 1]})
