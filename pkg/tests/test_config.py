import math

import pytest
import yaml

from pauli_lab.harness.config import DEFAULT_TOLERANCES, ConfigError, dump_config, parse_config

BASE = {"domain": {"kind": "unit-disk"}, "field": {"constant": 1}, "h": [0.3, 0.2], "k_max": 2}


def cfg(**over):
    d = {k: (dict(v) if isinstance(v, dict) else v) for k, v in BASE.items()}
    d.update(over)
    return d


def violations(d, certify=True):
    with pytest.raises(ConfigError) as exc:
        parse_config(d, certify=certify)
    return exc.value.violations


def test_minimal_config_defaults():
    c = parse_config(BASE)
    assert c.domain.kind == "unit-disk" and c.domain.M == 256
    assert c.h == (0.3, 0.2) and c.k_max == 2
    assert (c.N_r, c.N_theta, c.n_max, c.hardy_N) == (96, 17, 8, 40)
    assert c.solver == "dense" and c.cache and c.oracle
    assert c.tolerances == DEFAULT_TOLERANCES
    assert c.B0 == 1.0 and c.min_dn == pytest.approx(0.5)


def test_positivity_certificate():
    c = parse_config(cfg(field={"expression": "1 + 0.5*cos(x1)"}))
    assert c.field_expr.certificate > 0.45
    assert c.field_expr.certificate == pytest.approx(1 + 0.5 * math.cos(1.0), rel=1e-12)


def test_field_touching_zero_stops_at_validation():
    v = violations(cfg(field={"expression": "x1^2 + x2^2"}))
    assert "positive on the closed domain" in v[0]


def test_nonfinite_field():
    v = violations(cfg(field={"expression": "1/x1"}))
    assert "not finite" in v[0] or "positive" in v[0]


def test_decreasing_h_required():
    assert "h must be strictly decreasing" in violations(cfg(h=[0.1, 0.2]))
    assert "h must be strictly decreasing" in violations(cfg(h=[0.2, 0.2]))


@pytest.mark.parametrize(
    "over, fragment",
    [
        ({"Nr": 3}, "unknown key 'Nr' in configuration (did you mean 'N_r'?)"),
        ({"domain": "disk"}, "domain must be a mapping"),
        ({"domain": {"kind": "unit-disk", "radius2": "1"}}, "unknown key 'radius2' in domain"),
        ({"domain": {"kind": "square"}}, "domain.kind must be one of"),
        ({"domain": {"kind": "unit-disk", "M": 255}}, "domain.M must be a positive even integer"),
        ({"domain": {"kind": "disk"}}, "domain.R must be a positive number"),
        ({"domain": {"kind": "disk", "R": -1}}, "domain.R must be a positive number"),
        ({"domain": {"kind": "star-like", "radius": "1 + 0.1*cos(2*t)"}}, "domain.radius: unknown identifier 't'"),
        ({"domain": {"kind": "star-like", "radius": "0.5 + cos(s)"}}, "radius function must be positive"),
        ({"field": {}}, "field must be a mapping with exactly one"),
        ({"field": {"constant": 1, "radial": "r"}}, "field must be a mapping with exactly one"),
        ({"field": {"uniform": 1}}, "unknown key 'uniform' in field"),
        ({"field": {"constant": "one"}}, "constant field must be a number"),
        ({"field": {"expression": "1 + (x1"}}, "field.expression: expected ')'"),
        ({"h": []}, "h must be a nonempty list"),
        ({"h": 0.2}, "h must be a nonempty list"),
        ({"h": [0.3, -0.1]}, "h values must be positive"),
        ({"k_max": 0}, "k_max must be an integer >= 1"),
        ({"k_max": True}, "k_max must be an integer >= 1"),
        ({"N_r": 0}, "N_r must be a positive integer"),
        ({"N_theta": 16}, "N_theta must be odd"),
        ({"N_theta": 1}, "N_theta must be at least 3"),
        ({"potential_N_r": -4}, "potential_N_r must be a positive integer"),
        ({"potential_N_theta": 2.5}, "potential_N_theta must be a positive integer"),
        ({"n_max": 0}, "n_max must be a positive integer"),
        ({"hardy_N": "many"}, "hardy_N must be a positive integer"),
        ({"grading": 1.0}, "grading must lie in [0, 1)"),
        ({"alpha": 0.0}, "alpha must lie in (0, 1)"),
        ({"solver": "lanczos"}, "solver must be 'dense' or 'iterative'"),
        ({"cache": "yes"}, "cache must be true or false"),
        ({"oracle": 1}, "oracle must be true or false"),
        ({"figures": None}, "figures must be true or false"),
        ({"seed": 1.5}, "seed must be an integer"),
        ({"output": ""}, "output must be a nonempty path"),
        ({"tolerances": [0.1]}, "tolerances must be a mapping"),
        ({"tolerances": {"brackt": 0.1}}, "unknown key 'brackt' in tolerances"),
        ({"tolerances": {"slope": 0}}, "tolerances.slope must be a positive number"),
        ({"k_max": 4, "n_max": 2}, "n_max=2 is below k_max-1=3"),
        ({"k_max": 4, "hardy_N": 12}, "hardy_N=12 is below k_max+10=14"),
        ({"domain": {"kind": "star-like", "radius": "1 + 0.1*cos(2*s)"}, "field": {"radial": "1 + r^2"}},
         "a radial field needs a disk domain"),
    ],
)
def test_each_violation(over, fragment):
    v = violations(cfg(**over), certify=False)
    assert any(fragment in x for x in v), v


def test_all_violations_reported_together():
    v = violations(cfg(h=[0.1, 0.2], k_max=0, N_theta=4, bogus=1), certify=False)
    assert len(v) == 4


def test_layer_resolution_check():
    v = violations(cfg(h=[0.3, 0.01], N_r=24))
    assert "boundary layer" in v[0] and "raise N_r" in v[0]


def test_file_errors(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(str(tmp_path / "missing.yaml"))
    bad = tmp_path / "bad.yaml"
    bad.write_text("domain: [unclosed\n")
    with pytest.raises(ConfigError, match="malformed"):
        parse_config(str(bad))
    lst = tmp_path / "list.yaml"
    lst.write_text("- 1\n- 2\n")
    with pytest.raises(ConfigError, match="mapping"):
        parse_config(str(lst))


def test_dump_round_trip(tmp_path):
    c = parse_config(cfg(domain={"kind": "star-like", "radius": "1 + 0.1*cos(2*s)"}, N_theta=9,
                         tolerances={"bracket": 0.3}))
    p = tmp_path / "c.yaml"
    p.write_text(dump_config(c))
    d = parse_config(str(p))
    assert d.describe() == c.describe()
    assert yaml.safe_load(p.read_text())["domain"]["radius"] == "1 + 0.1*cos(2*s)"


def test_key_is_content_hash():
    a = parse_config(BASE)
    b = parse_config(cfg(N_r=64))
    assert a.key("domain", "field") == b.key("domain", "field")
    assert a.key("N_r") != b.key("N_r")
