import pytest

from govsim.errors import GovSimError
from govsim.keys import get_scheme

SCHEMES = ["seeded", "ed25519"]


@pytest.fixture(params=SCHEMES)
def scheme(request):
    try:
        return get_scheme(request.param)
    except GovSimError:
        pytest.skip(f"{request.param} backend unavailable")


def test_generate_is_deterministic(scheme):
    a = scheme.generate(b"seed-material")
    b = scheme.generate(b"seed-material")
    assert a == b
    assert scheme.generate(b"other").public != a.public


def test_sign_verify_round_trip(scheme):
    kp = scheme.generate(b"k1")
    sig = scheme.sign(kp.private, b"message")
    assert scheme.verify(kp.public, b"message", sig)


def test_signing_is_deterministic(scheme):
    kp = scheme.generate(b"k1")
    assert scheme.sign(kp.private, b"m") == scheme.sign(kp.private, b"m")


def test_corrupted_signature_rejected(scheme):
    kp = scheme.generate(b"k1")
    sig = bytearray(scheme.sign(kp.private, b"m"))
    sig[0] ^= 0x01
    assert not scheme.verify(kp.public, b"m", bytes(sig))


def test_wrong_message_rejected(scheme):
    kp = scheme.generate(b"k1")
    sig = scheme.sign(kp.private, b"m")
    assert not scheme.verify(kp.public, b"other", sig)


def test_wrong_key_rejected(scheme):
    kp1 = scheme.generate(b"k1")
    kp2 = scheme.generate(b"k2")
    sig = scheme.sign(kp1.private, b"m")
    assert not scheme.verify(kp2.public, b"m", sig)


def test_unknown_scheme():
    with pytest.raises(GovSimError):
        get_scheme("rot13")
