from __future__ import annotations

import json
import math

import pytest

from thinfilm.config import (
    RunConfig,
    apply_overrides,
    config_hash,
    parse_config,
    parse_override_value,
    resolved_payload,
)


def test_minimal_document_takes_every_default():
    cfg = parse_config('{"experiment": "simulate"}')
    assert cfg.grid.n == 64
    assert cfg.grid.L == pytest.approx(2 * math.pi)
    assert cfg.params.to_params().R == 1.0
    assert cfg.stepper.dt == 1.0 / 512
    assert cfg.simulate.T == 0.5
    assert cfg.illposed.Ns == [8.0, 16.0, 32.0]
    assert cfg.experiment_grid().n == 64


def test_empty_text_with_experiment_override_is_complete():
    cfg = parse_config("", ["experiment=sweep"])
    assert cfg.experiment == "sweep"
    assert cfg.experiment_grid().n == 32


def test_experiment_grid_follows_selected_block():
    assert parse_config('{"experiment": "illposed"}').experiment_grid().n == 288
    assert parse_config('{"experiment": "picard-validate"}').experiment_grid().n == 32
    cfg = parse_config('{"experiment": "kernel-check", "kernel_check": {"grid": {"n": 16}}}')
    assert cfg.experiment_grid().n == 16


@pytest.mark.parametrize(
    ("text", "message"),
    [
        ('{"experiment": "illposed", "illposed": {"s": -2}}', "s < -2 required"),
        ('{"experiment": "sweep", "params": {"alpha": 3}}', "alpha <= 2 required"),
        ('{"experiment": "sweep", "sweep": {"s": 1}}', "s > 1 required"),
        ('{"experiment": "simulate", "grid": {"n": 7}}', "even and >= 8"),
        ('{"experiment": "simulate", "bogus": 1}', "Extra inputs are not permitted"),
        ('{"experiment": "nope"}', "experiment"),
        ('{"experiment": "illposed", "illposed": {"Ns": [8, 16]}}', "at least three"),
    ],
)
def test_invalid_documents_are_rejected(text: str, message: str):
    with pytest.raises(ValueError, match=message):
        parse_config(text)


def test_region_check_can_be_switched_off():
    cfg = parse_config(
        '{"experiment": "simulate", "params": {"alpha": 3, "validate_region": false}}'
    )
    assert cfg.params.to_params().alpha == 3.0


def test_malformed_json_is_a_value_error():
    with pytest.raises(ValueError, match="not valid JSON"):
        parse_config("{experiment")
    with pytest.raises(ValueError, match="JSON object"):
        parse_config("[1, 2]")


def test_override_values_parse_as_json_with_string_fallback():
    assert parse_override_value("3") == 3
    assert parse_override_value("[8, 16]") == [8, 16]
    assert parse_override_value("true") is True
    assert parse_override_value("sweep") == "sweep"


def test_overrides_create_nested_blocks():
    payload = apply_overrides({}, ["sweep.gamma=3", "sweep.grid.n=16", "seed=9"])
    assert payload == {"sweep": {"gamma": 3, "grid": {"n": 16}}, "seed": 9}
    with pytest.raises(ValueError, match="expected path=value"):
        apply_overrides({}, ["sweep.gamma"])
    with pytest.raises(ValueError, match="non-mapping"):
        apply_overrides({"seed": 1}, ["seed.x=2"])


def test_overrides_win_over_document():
    cfg = parse_config('{"experiment": "sweep", "sweep": {"gamma": 0.5}}', ["sweep.gamma=2"])
    assert cfg.sweep.gamma == 2.0


def test_hash_is_stable_and_ignores_output_directory():
    a = parse_config('{"experiment": "sweep"}')
    b = parse_config('{"experiment": "sweep", "out_dir": "/tmp/elsewhere"}')
    c = parse_config('{"experiment": "sweep", "seed": 1}')
    assert config_hash(a) == config_hash(b)
    assert config_hash(a) != config_hash(c)
    assert len(config_hash(a)) == 64


def test_resolved_payload_round_trips():
    cfg = parse_config('{"experiment": "kernel-check", "seed": 4}')
    again = RunConfig.model_validate_json(json.dumps(resolved_payload(cfg)))
    assert config_hash(again) == config_hash(cfg)
