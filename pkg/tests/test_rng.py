"""Generator reproducibility: identical seeds must give identical streams."""

from banksim.rng import Xoshiro256StarStar, derive_subseed, splitmix64


def test_same_seed_same_stream():
    a = Xoshiro256StarStar(42)
    b = Xoshiro256StarStar(42)
    assert [a.next_u64() for _ in range(100)] == [b.next_u64() for _ in range(100)]


def test_different_seeds_diverge():
    a = Xoshiro256StarStar(1)
    b = Xoshiro256StarStar(2)
    assert [a.next_u64() for _ in range(8)] != [b.next_u64() for _ in range(8)]


def test_outputs_are_64_bit():
    gen = Xoshiro256StarStar(7)
    for _ in range(1000):
        assert 0 <= gen.next_u64() < 1 << 64


def test_stream_regression_pin():
    # frozen first outputs for seed 12345; guards against accidental
    # algorithm changes that would silently break replay of old runs
    gen = Xoshiro256StarStar(12345)
    first = [gen.next_u64() for _ in range(4)]
    assert first == [
        13720838825685603483,
        2398916695208396998,
        17770384849984869256,
        891717726879801395,
    ]


def test_splitmix_advances():
    s0, out0 = splitmix64(0)
    s1, out1 = splitmix64(s0)
    assert s0 != 0 and s1 != s0
    assert out0 != out1


def test_subseed_deterministic_and_spread():
    seeds = [derive_subseed(99, i) for i in range(16)]
    assert seeds == [derive_subseed(99, i) for i in range(16)]
    assert len(set(seeds)) == 16


def test_degenerate_rates_consume_no_draws():
    gen = Xoshiro256StarStar(5)
    reference = Xoshiro256StarStar(5)
    assert gen.bernoulli_permil(0) is False
    assert gen.bernoulli_permil(1000) is True
    # stream position unchanged by the two degenerate draws above
    assert gen.next_u64() == reference.next_u64()


def test_bernoulli_rate_is_roughly_honoured():
    gen = Xoshiro256StarStar(2024)
    hits = sum(gen.bernoulli_permil(500) for _ in range(10_000))
    assert 4_600 < hits < 5_400
