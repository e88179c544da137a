import json
import math

import pytest

from obkm.config import ConfigError, load_config, parse_config

BASE = {
    "grid": {"n": 16},
    "physical": {"nu_s": 1.0, "nu_p": 0.5, "lambda": 2.0},
    "stepper": {"dt": 0.01, "t_end": 0.1},
    "ic": {"kind": "random_band", "seed": 3, "band_limit": 4},
}


def with_(section, **kw):
    d = json.loads(json.dumps(BASE))
    d.setdefault(section, {}).update(kw)
    return d


def test_valid():
    cfg = parse_config(BASE)
    assert cfg.grid.n == 16 and cfg.grid.length == pytest.approx(2 * math.pi)
    assert cfg.physical.lam == 2.0 and cfg.stepper.dt == 0.01
    assert cfg.ic.band_limit == 4


def test_minimal_uses_defaults():
    cfg = parse_config({"grid": {"n": 8}})
    assert cfg.physical.nu_s == 1.0 and cfg.ic.kind == "random_band"


def test_lambda_inf():
    cfg = parse_config(with_("physical", **{"lambda": "inf", "kelvin_voigt": True}))
    assert math.isinf(cfg.physical.lam) and cfg.physical.kelvin_voigt


def test_to_dict_round_trip():
    cfg = parse_config(with_("physical", **{"lambda": "inf"}))
    assert parse_config(json.loads(json.dumps(cfg.to_dict()))) == cfg


@pytest.mark.parametrize(
    "data,path",
    [
        (with_("physical", nu_s=-1), "physical.nu_s"),
        (with_("physical", nu_s=0), "physical.nu_s"),
        (with_("physical", **{"lambda": "infinity"}), "physical.lambda"),
        (with_("physical", **{"lambda": 1.0, "kelvin_voigt": True}), "physical.kelvin_voigt"),
        (with_("grid", n=24), "grid.n"),
        (with_("grid", n=4), "grid.n"),
        (with_("grid", extra=1), "grid.extra"),
        ({"physical": {}}, "grid"),
        (with_("stepper", dt=-0.1), "stepper.dt"),
        (with_("stepper", dt=1e-9, dt_min=1e-8), "stepper.dt"),
        (with_("stepper", mollify_epsilon=0.5), "stepper.mollify_epsilon"),
        (with_("stepper", mollify_epsilon=4.0), "stepper.mollify_epsilon"),
        (with_("ic", band_limit=6), "ic.band_limit"),
        (with_("ic", kind="single_mode", wavevector=[0, 0, 0]), "ic.wavevector"),
        (with_("ic", kind="vortex"), "ic.kind"),
        (with_("output", checkpoint_every=0), "output.checkpoint_every"),
    ],
)
def test_error_paths(data, path):
    with pytest.raises(ConfigError) as info:
        parse_config(data)
    assert info.value.path == path
    assert str(info.value).startswith(path)


def test_negative_viscosity_message():
    with pytest.raises(ConfigError, match=r"physical\.nu_s: -1"):
        parse_config(with_("physical", nu_s=-1))


def test_load_file(tmp_path):
    p = tmp_path / "c.json"
    p.write_text(json.dumps(BASE))
    assert load_config(p) == parse_config(BASE)


@pytest.mark.parametrize("text,match", [("{", "invalid JSON"), ("[1]", "object")])
def test_load_rejects(tmp_path, text, match):
    p = tmp_path / "c.json"
    p.write_text(text)
    with pytest.raises(ConfigError, match=match):
        load_config(p)


def test_missing_file(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "nope.json")
