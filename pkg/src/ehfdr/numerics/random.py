"""Counter-based random streams and channel sampling.

Every draw is addressed by ``(seed, stream_id, purpose, chunk_index)``: a
Philox generator is keyed from those four integers, and produces a fixed-size
chunk of blocks.  Block ``i`` therefore always receives the same variates
regardless of how many blocks are requested or which worker generates it.
"""

from dataclasses import dataclass

import numpy as np

CHUNK_SIZE = 8192

# Purpose tags keep channel draws and CSI-error draws on disjoint streams.
PURPOSE_CHANNEL = 0
PURPOSE_CSI_ERROR = 1


@dataclass(frozen=True)
class RandomStream:
    """A reproducible family of generators identified by seed and stream id."""

    seed: int
    stream_id: int = 0

    def generator(self, chunk_index, purpose=PURPOSE_CHANNEL):
        """Philox generator for one chunk; identical keys give identical generators."""
        seq = np.random.SeedSequence(
            int(self.seed), spawn_key=(int(self.stream_id), int(purpose), int(chunk_index))
        )
        return np.random.Generator(np.random.Philox(seq))

    def substream(self, offset):
        """A stream whose draws are independent of this one."""
        return RandomStream(self.seed, self.stream_id * 1_000_003 + 1 + int(offset))


def chunk_layout(n_blocks, chunk_size=CHUNK_SIZE):
    """List of ``(chunk_index, start, count)`` covering ``n_blocks`` blocks."""
    layout = []
    start = 0
    idx = 0
    while start < n_blocks:
        count = min(chunk_size, n_blocks - start)
        layout.append((idx, start, count))
        start += count
        idx += 1
    return layout


def _channel_chunk(params, stream, chunk_index, count, chunk_size):
    gen = stream.generator(chunk_index, PURPOSE_CHANNEL)
    normals = gen.standard_normal((chunk_size, 8))[:count]
    theta = gen.random(chunk_size)[:count] * 2.0 * np.pi
    cn = (normals[:, 0::2] + 1j * normals[:, 1::2]) * np.sqrt(0.5)
    k = params.rician_k
    s0 = params.sigma_02
    h0 = np.sqrt(k * s0 / (k + 1.0)) * np.exp(1j * theta) + np.sqrt(s0 / (k + 1.0)) * cn[:, 0]
    h1 = np.sqrt(params.lambda1) * cn[:, 1]
    h2 = np.sqrt(params.lambda2) * cn[:, 2]
    h3 = np.sqrt(params.lambda3) * cn[:, 3]
    return h0, h1, h2, h3


def sample_channel_chunk(params, stream, chunk_index, count, chunk_size=CHUNK_SIZE):
    """Channel coefficients for ``count`` blocks of one chunk (a prefix of the chunk)."""
    from ..channel import ChannelSample

    return ChannelSample.from_coefficients(
        *_channel_chunk(params, stream, chunk_index, count, chunk_size)
    )


def sample_channels(params, rng_stream, n_blocks=1, chunk_size=CHUNK_SIZE):
    """Draw ``n_blocks`` independent block-fading realisations.

    ``h1``, ``h2``, ``h3`` are circularly symmetric complex Gaussian with
    ``E|h_i|^2 = lambda_i``.  ``h0`` is Rician with K-factor ``rician_k`` and
    mean power ``sigma_02``, with a uniformly distributed specular phase.

    Parameters
    ----------
    params : SystemParams
    rng_stream : RandomStream
    n_blocks : int

    Returns
    -------
    ChannelSample
        Array-valued, one entry per block.
    """
    from ..channel import ChannelSample

    parts = [
        _channel_chunk(params, rng_stream, idx, count, chunk_size)
        for idx, _start, count in chunk_layout(n_blocks, chunk_size)
    ]
    coeffs = [np.concatenate([p[i] for p in parts]) for i in range(4)]
    return ChannelSample.from_coefficients(*coeffs)


def complex_normal_chunk(stream, chunk_index, count, width, purpose=PURPOSE_CSI_ERROR,
                         chunk_size=CHUNK_SIZE):
    """Unit-variance CN(0, 1) draws of shape ``(count, width)`` for one chunk."""
    gen = stream.generator(chunk_index, purpose)
    normals = gen.standard_normal((chunk_size, 2 * width))[:count]
    return (normals[:, 0::2] + 1j * normals[:, 1::2]) * np.sqrt(0.5)
