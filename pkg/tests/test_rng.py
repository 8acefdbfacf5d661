import numpy as np

from fastdiff import NoiseStream, chain_streams, substream


def test_same_seed_same_draws():
    a = NoiseStream.from_seed(42).standard_normal(16)
    b = NoiseStream.from_seed(42).standard_normal(16)
    assert np.array_equal(a, b)


def test_chain_streams_independent_of_batch_size():
    # chain 2 draws the same values whether 3 or 30 chains were spawned
    small = chain_streams(7, 3)[2].standard_normal(8)
    large = chain_streams(7, 30)[2].standard_normal(8)
    assert np.array_equal(small, large)


def test_substream_matches_spawned_child():
    spawned = chain_streams(123, 5)[4].standard_normal(6)
    direct = substream(123, 4).standard_normal(6)
    assert np.array_equal(spawned, direct)


def test_chunked_draws_equal_sequential_draws():
    # samplers pre-draw per-chain noise blocks in one call; this only
    # matches a lazy per-step schedule if chunking does not change the
    # stream of values
    whole = NoiseStream.from_seed(9).standard_normal((6, 3))
    piecewise = NoiseStream.from_seed(9)
    rows = [piecewise.standard_normal(3) for _ in range(6)]
    assert np.array_equal(whole, np.stack(rows))


def test_draw_counter():
    stream = NoiseStream.from_seed(0)
    assert stream.normals_drawn == 0
    stream.standard_normal(5)
    stream.standard_normal((2, 3))
    assert stream.normals_drawn == 11


def test_golden_values_pin_the_generation_method():
    # Philox + the ziggurat normal sampler; a change in either shows up here
    # and would invalidate stored golden files
    got = NoiseStream.from_seed(20240817).standard_normal(4)
    np.testing.assert_allclose(
        got,
        [-0.937167027552873, -0.14051519304034668,
         0.8312710253346679, 0.1684353656770324],
        rtol=0, atol=1e-15)
