import json

import numpy as np
import pytest

from kinterp import Couple, InputError, MeasureSpace, NormSpec, synthesize_contraction
from kinterp.serialize import digest, dumps, envelope, loads, verify_envelope


@pytest.fixture
def synth_env(l1linf):
    r = synthesize_contraction(l1linf(2), [2, 0], [1, 1])
    return envelope("SynthesisResult", r.to_json(), seed=3)


def test_envelope_fields(synth_env):
    assert set(synth_env) == {"schemaVersion", "type", "seed", "payload", "digest"}
    assert synth_env["digest"] == digest(synth_env["payload"])
    assert verify_envelope(loads(dumps(synth_env))).ok


def test_dumps_deterministic(synth_env):
    assert dumps(synth_env) == dumps(loads(dumps(synth_env)))


def test_digest_mismatch(synth_env):
    bad = json.loads(json.dumps(synth_env))
    bad["payload"]["matrix"][0][0] += 1e-3
    out = verify_envelope(bad)
    assert not out.ok and out.reason == "digest mismatch"


def test_forged_digest_caught_semantically(synth_env):
    bad = json.loads(json.dumps(synth_env))
    bad["payload"]["matrix"][0][0] *= -1
    bad["digest"] = digest(bad["payload"])
    out = verify_envelope(bad)
    assert not out.ok and "negative" in out.reason


def test_kcurve_envelope(l1linf):
    from kinterp import k_curve
    C = l1linf(3)
    c = k_curve(C, [3, -1, 2])
    env = envelope("KCurve", {**c.to_json(), "couple": C.to_json(), "f": [3, -1, 2]})
    assert verify_envelope(env).ok
    env["payload"]["values"][1] = 5.5
    env["digest"] = digest(env["payload"])
    assert not verify_envelope(env).ok


def test_malformed_json():
    with pytest.raises(InputError, match="line 1"):
        loads("{not json")


def test_bad_schema(synth_env):
    with pytest.raises(InputError):
        verify_envelope({**synth_env, "schemaVersion": 99})
