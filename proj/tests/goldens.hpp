#pragma once

// Frozen reference values produced by a one-off oracle run of this build
// environment (zlib 1.2.11, DEFLATE level 6; DoG detector as shipped).
// They pin bit-stability: any change to these numbers means the underlying
// routine changed behavior.

// DEFLATE(level 6) size of a constant 84x84 frame (value 10).
#define SQRL_GOLDEN_CONSTANT_DEFLATE_BYTES 30u

// DEFLATE(level 6) size of an Rng(1)-seeded uniform-noise 84x84 frame.
#define SQRL_GOLDEN_NOISE_DEFLATE_BYTES 7067u

// Keypoints detected on a single bright 5x5 blob over black.
#define SQRL_GOLDEN_BLOB_KEYPOINTS 1
