import numpy as np
import pytest
from scipy.stats import chisquare

from tddnc.markov import expected_extra_receptions
from tddnc.rlnc import (
    DEFAULT_POLYNOMIALS,
    CodedPacket,
    Decoder,
    GaloisField,
    encode,
    pack_bits,
    random_coefficients,
    unpack_bits,
)


def test_field_identity_and_inverse_exhaustive_byte_field():
    f = GaloisField(8)
    for a in range(256):
        assert f.mul(a, 1) == a
        assert f.add(a, a) == 0
        if a:
            assert f.mul(a, f.inv(a)) == 1


def test_field_single_reduction_step():
    # x * x^7 = x^8, reduced by x^8+x^4+x^3+x+1
    assert GaloisField(8).mul(0x02, 0x80) == 0x1B


def test_field_default_polynomials_build_and_satisfy_laws():
    rng = np.random.default_rng(2)
    for g, poly in DEFAULT_POLYNOMIALS.items():
        f = GaloisField(g)
        assert f.polynomial == poly
        for _ in range(50):
            a = int(rng.integers(1, f.q))
            b = int(rng.integers(1, f.q))
            c = int(rng.integers(0, f.q))
            assert f.mul(a, f.inv(a)) == 1
            assert f.mul(a, b) == f.mul(b, a)
            # distributivity over xor addition
            assert f.mul(a, b ^ c) == f.mul(a, b) ^ f.mul(a, c)


def test_field_rejects_bad_arguments():
    with pytest.raises(ValueError):
        GaloisField(0)
    with pytest.raises(ValueError):
        GaloisField(17)
    with pytest.raises(ValueError):
        GaloisField(8, polynomial=0x1B)  # degree 4, not 8
    with pytest.raises(ZeroDivisionError):
        GaloisField(4).inv(0)


def test_encode_unit_vector_projects():
    f = GaloisField(8)
    rng = np.random.default_rng(5)
    block = rng.integers(0, 256, size=(6, 20), dtype=np.int64)
    for k in range(6):
        coeffs = np.zeros(6, dtype=np.int64)
        coeffs[k] = 1
        pkt = encode(f, block, coeffs)
        assert np.array_equal(pkt.payload, block[k])


def test_encode_zero_vector_gives_zero_payload():
    f = GaloisField(8)
    block = np.arange(40, dtype=np.int64).reshape(4, 10) % 256
    pkt = encode(f, block, np.zeros(4, dtype=np.int64))
    assert not pkt.payload.any()


def test_coefficient_draws_uniform():
    f = GaloisField(4)
    rng = np.random.default_rng(99)
    draws = np.concatenate([random_coefficients(f, 10, rng) for _ in range(10_000)])
    counts = np.bincount(draws, minlength=16)
    assert chisquare(counts).pvalue > 0.01


def test_absorb_duplicate_is_dependent():
    f = GaloisField(8)
    rng = np.random.default_rng(7)
    block = rng.integers(0, 256, size=(5, 8), dtype=np.int64)
    dec = Decoder(f, 5, 8)
    pkt = encode(f, block, rng=rng)
    assert dec.absorb(pkt) == 1
    assert dec.absorb(pkt) == 0
    assert dec.rank == 1


def test_absorb_standard_basis_reaches_full_rank():
    f = GaloisField(2)
    block = np.arange(12, dtype=np.int64).reshape(4, 3) % 4
    dec = Decoder(f, 4, 3)
    for k in (2, 0, 3, 1):
        coeffs = np.zeros(4, dtype=np.int64)
        coeffs[k] = 1
        assert dec.absorb(encode(f, block, coeffs)) == 1
    assert dec.rank == 4
    assert np.array_equal(dec.decode(), block)


def test_rank_monotone_and_bounded():
    f = GaloisField(2)
    rng = np.random.default_rng(13)
    block = rng.integers(0, 2, size=(6, 4), dtype=np.int64)
    dec = Decoder(f, 6, 4)
    last = 0
    for _ in range(60):
        dec.absorb(encode(f, block, rng=rng))
        assert last <= dec.rank <= 6
        last = dec.rank
    assert dec.rank == 6


def test_receptions_until_full_rank_match_expectation():
    # coupon-style overhead of random coefficient vectors vs the closed-form mean
    M, trials = 10, 4000
    for g in (1, 8):
        f = GaloisField(g)
        counts = np.empty(trials)
        for r in range(trials):
            rng = np.random.default_rng([606, g, r])
            dec = Decoder(f, M, 0)
            got = 0
            while dec.rank < M:
                dec.absorb(CodedPacket(random_coefficients(f, M, rng), np.empty(0, dtype=np.int64)))
                got += 1
            counts[r] = got
        mean = counts.mean()
        stderr = counts.std(ddof=1) / np.sqrt(trials)
        predicted = expected_extra_receptions(M, f.q)
        assert abs(mean - predicted) <= 3 * stderr


def test_dependent_arrivals_rare_in_byte_field():
    f = GaloisField(8)
    M = 10
    dependent = total = 0
    for r in range(2000):
        rng = np.random.default_rng([777, r])
        dec = Decoder(f, M, 0)
        while dec.rank < M:
            delta = dec.absorb(
                CodedPacket(random_coefficients(f, M, rng), np.empty(0, dtype=np.int64))
            )
            dependent += 1 - delta
            total += 1
    assert dependent / total < 0.01


@pytest.mark.parametrize("M", [1, 5, 10])
@pytest.mark.parametrize("g", [1, 8])
def test_round_trip(M, g):
    f = GaloisField(g)
    rng = np.random.default_rng([M, g])
    for _ in range(20):
        block = rng.integers(0, f.q, size=(M, 16), dtype=np.int64)
        dec = Decoder(f, M, 16)
        while dec.rank < M:
            dec.absorb(encode(f, block, rng=rng))
        assert np.array_equal(dec.decode(), block)


def test_single_packet_block_decodes_by_inverse():
    f = GaloisField(8)
    block = np.array([[7, 200, 13]], dtype=np.int64)
    coeffs = np.array([29], dtype=np.int64)
    pkt = encode(f, block, coeffs)
    dec = Decoder(f, 1, 3)
    dec.absorb(pkt)
    decoded = dec.decode()
    assert np.array_equal(decoded, block)
    manual = np.array([f.mul(f.inv(29), int(v)) for v in pkt.payload])
    assert np.array_equal(decoded[0], manual)


def test_payload_corruption_breaks_round_trip():
    # mutation check: the round-trip comparison is actually sensitive to payload bits
    f = GaloisField(8)
    rng = np.random.default_rng(31)
    block = rng.integers(0, 256, size=(4, 6), dtype=np.int64)
    dec = Decoder(f, 4, 6)
    while dec.rank < 4:
        dec.absorb(encode(f, block, rng=rng))
    dec._rows[2][4 + 3] ^= 0x55
    assert not np.array_equal(dec.decode(), block)


def test_decode_requires_full_rank():
    dec = Decoder(GaloisField(4), 3, 2)
    with pytest.raises(ValueError):
        dec.decode()


def test_bit_packing_round_trip_and_padding():
    data = bytes(range(64))
    for n_bits, g in ((512, 8), (500, 8), (100, 7), (1, 3), (511, 16), (37, 5)):
        symbols = pack_bits(data, n_bits, g)
        assert len(symbols) == -(-n_bits // g)
        back = unpack_bits(symbols, n_bits, g)
        orig = np.unpackbits(np.frombuffer(data, dtype=np.uint8))[:n_bits]
        got = np.unpackbits(np.frombuffer(back, dtype=np.uint8))[:n_bits]
        assert np.array_equal(orig, got)
