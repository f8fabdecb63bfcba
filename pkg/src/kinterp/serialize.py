"""Versioned JSON envelopes for certificates and their offline re-verification.

An envelope is ``{"schemaVersion", "type", "seed", "payload", "digest"}``
where ``digest`` is the SHA-256 of the canonical JSON of the payload.
Verification checks the digest and then re-derives the claim from the
payload alone (rebuilding LPs, curves and norms), so a forged digest does
not help a payload that is wrong.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .exceptions import InputError, KInterpError, VerificationError
from .lattice import Couple, LatticeVector, NormSpec

__all__ = ["SCHEMA_VERSION", "envelope", "dumps", "loads", "digest", "verify_envelope",
           "VerifyOutcome"]

SCHEMA_VERSION = 1


def _canonical(obj):
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False)


def digest(payload):
    return hashlib.sha256(_canonical(payload).encode()).hexdigest()


def envelope(kind, payload, seed=None):
    return {"schemaVersion": SCHEMA_VERSION, "type": kind, "seed": seed,
            "payload": payload, "digest": digest(payload)}


def dumps(obj):
    """Deterministic JSON text (sorted keys, shortest round-trip floats)."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def loads(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON at line {exc.lineno}, column {exc.colno}: "
                         f"{exc.msg}") from exc


@dataclass
class VerifyOutcome:
    ok: bool
    kind: str
    reason: str = ""


def _verify_synthesis(p):
    from .synthesis import SynthesisResult
    SynthesisResult.from_json(p).verify()


def _verify_infeasible(p):
    from .synthesis import InfeasibilityCertificate
    InfeasibilityCertificate.from_json(p).verify()


def _verify_witness(p):
    from .synthesis import CMWitness, InfeasibilityCertificate
    cert = InfeasibilityCertificate.from_json(p["certificate"])
    CMWitness(np.array(p["f"], float), np.array(p["g"], float), cert,
              int(p.get("pairsTried", 0))).verify()
    if not (np.allclose(cert.f, p["f"], rtol=0, atol=0)
            and np.allclose(cert.g, p["g"], rtol=0, atol=0)):
        raise VerificationError("certificate is about a different pair")


def _verify_relation(p):
    from .relations import check_relation
    couple = Couple.from_json(p["couple"]) if p.get("couple") else None
    space = couple.space if couple else None
    if space is None:
        from .lattice import MeasureSpace
        space = MeasureSpace(tuple(p["weights"]))
    g, f = LatticeVector(space, p["g"]), LatticeVector(space, p["f"])
    rep = check_relation(p["kind"], g, f, couple, constant=p.get("constant", 1.0))
    if rep.holds != p["holds"]:
        raise VerificationError(f"relation verdict does not replay ({rep.holds})")


def _verify_kcurve(p):
    from .kfunctional import k_curve
    couple = Couple.from_json(p["couple"])
    curve = k_curve(couple, p["f"])
    ts = np.asarray(p["breakpoints"], float)
    ks = np.asarray(p["values"], float)
    if ts.shape != curve.breakpoints.shape or not np.allclose(curve(ts), ks, rtol=0,
                                                              atol=1e-9):
        raise VerificationError("K-curve does not replay")


def _verify_gp(p):
    from .operators import OperatorSpec, certify_gp
    couple = Couple.from_json(p["couple"])
    S = OperatorSpec.from_json(p["operator"])
    cert = certify_gp(S, p["constant"], p["class"], [np.array(s) for s in p["samples"]], couple)
    if cert.verdict != p["verdict"]:
        raise VerificationError(f"GP verdict does not replay ({cert.verdict})")


def _verify_monotonicity(p):
    from .certify import Budget, MODES, certify_intermediate
    from .relations import check_relation
    couple = Couple.from_json(p["couple"])
    X = NormSpec.from_json(p["norm"])
    if p["verdict"] == "refuted":
        w = p["witness"]
        g, f = LatticeVector(couple.space, w["g"]), LatticeVector(couple.space, w["f"])
        if not check_relation(MODES[p["mode"]], g, f, couple).holds:
            raise VerificationError("witness pair is not related")
        a, b = X(g), X(f)
        if not a > p["constant"] * b + 1e-9 * max(1.0, b):
            raise VerificationError("witness does not violate the norm inequality")
        return
    b = p["budget"]
    rep = certify_intermediate(X, couple, p["mode"], Budget(b["pairs"], b["seed"], b["grid"],
                                                            b["maxGridN"]), p["constant"])
    if rep.verdict != p["verdict"] or rep.pairs_checked != p["pairsChecked"]:
        raise VerificationError("certification run does not replay")


_VERIFIERS = {
    "SynthesisResult": _verify_synthesis,
    "InfeasibilityCertificate": _verify_infeasible,
    "CMWitness": _verify_witness,
    "RelationReport": _verify_relation,
    "KCurve": _verify_kcurve,
    "GPCertificate": _verify_gp,
    "MonotonicityReport": _verify_monotonicity,
}


def verify_envelope(env):
    """Check the digest and re-derive the payload's claim."""
    if not isinstance(env, dict) or "payload" not in env:
        raise InputError("not a certificate envelope")
    kind = env.get("type", "")
    if env.get("schemaVersion") != SCHEMA_VERSION:
        raise InputError(f"unsupported schemaVersion {env.get('schemaVersion')!r}")
    try:
        if digest(env["payload"]) != env.get("digest"):
            return VerifyOutcome(False, kind, "digest mismatch")
    except ValueError as exc:
        return VerifyOutcome(False, kind, f"payload is not canonical JSON: {exc}")
    check = _VERIFIERS.get(kind)
    if check is None:
        return VerifyOutcome(True, kind, "digest only")
    try:
        check(env["payload"])
    except (VerificationError, KInterpError, KeyError, TypeError, ValueError) as exc:
        return VerifyOutcome(False, kind, f"{type(exc).__name__}: {exc}")
    return VerifyOutcome(True, kind, "re-verified")
