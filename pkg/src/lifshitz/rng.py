"""Counter-based random streams.

A stream is identified by ``(seed, stream_id)`` and indexed by draw position,
so any replicate can be regenerated, extended, or resumed from an arbitrary
offset without touching the others. Draws come from Philox-4x64, keyed by
a ``SeedSequence`` over ``(seed, stream_id)``.
"""
import numpy as np

_BLOCK = 4  # uint64 outputs per Philox counter increment


def _key(seed, stream_id):
    ss = np.random.SeedSequence(entropy=int(seed) & (2**64 - 1), spawn_key=(int(stream_id),))
    return ss.generate_state(2, dtype=np.uint64)


class Stream:
    """Uniform doubles on [0, 1) at absolute positions of one stream."""

    def __init__(self, seed, stream_id=0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        self._key = _key(seed, stream_id)

    def uniforms(self, start, count):
        """Return draws ``start, ..., start + count - 1`` of this stream."""
        if start < 0 or count < 0:
            raise ValueError("start and count must be non-negative")
        block, skip = divmod(int(start), _BLOCK)
        bitgen = np.random.Philox(key=self._key, counter=np.array([block, 0, 0, 0], dtype=np.uint64))
        gen = np.random.Generator(bitgen)
        out = gen.random(skip + int(count))
        return out[skip:]

    def __repr__(self):
        return f"Stream(seed={self.seed}, stream_id={self.stream_id})"
