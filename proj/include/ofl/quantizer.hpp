// (s,b)-stochastic quantizer: block partitioning, randomized level rounding,
// bit accounting, and the wire codec.
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ofl/core.hpp"

namespace ofl {

struct QuantizerSpec {
    int levels = 1;  // s: quantization levels per coordinate
    int blocks = 1;  // b: number of transmitted block norms
    int dim = 1;     // D: vector dimension

    // Enforces s >= 1 and 1 <= b <= D.
    void validate() const;

    // Contiguous uniform-size partition of [0, D): the first D mod b blocks
    // hold ceil(D/b) coordinates, the rest floor(D/b).
    int block_begin(int block) const;
    int block_end(int block) const;
    int max_block_size() const;  // ceil(D/b)

    // sigma_q^2 = min{ ceil(D/b)/s^2, sqrt(ceil(D/b))/s }
    double variance_bound() const;
    // Fractional-bit accounting cost: 32 b + D (1 + log2(s+1)).
    double nominal_bits() const;
    // Bits per level on the wire: ceil(log2(s+1)).
    int level_bits() const;
    // Packed payload size: 32 b + D (1 + level_bits()).
    int64_t wire_payload_bits() const;
};

// Encoded local update: per-block norms, per-coordinate signs and levels.
// Norms are kept in wire precision (32-bit float) so that the codec
// round-trips bit-exactly; level probabilities are computed against the
// stored norm, which keeps the decoder's expectation exactly unbiased.
struct QuantizedMessage {
    std::vector<float> block_norms;  // b entries
    std::vector<int8_t> signs;       // D entries, +1 or -1
    std::vector<uint16_t> levels;    // D entries in [0, s]
    double nominal_bits = 0.0;
    uint32_t sender = 0;
    uint32_t step = 0;
};

// Randomized rounding per Definition of the (s,b) quantizer: coordinate i in
// block l with ratio r = |u_i| / ||u_l|| gets level m = floor(r*s) with
// probability 1-(r*s-m), else m+1. Zero-norm blocks quantize to zero
// deterministically; ratios exactly on a grid point round down with
// probability one.
QuantizedMessage quantize(const QuantizerSpec& spec, const ParameterVector& u, RngStream& rng,
                          uint32_t sender = 0, uint32_t step = 0);

// Reconstructs coordinate i in block l as ||u_l|| * sign_i * level_i / s.
ParameterVector dequantize(const QuantizedMessage& msg, const QuantizerSpec& spec);

// Wire format (little-endian):
//   header, 24 bytes: magic 'OFLQ', dim, blocks, levels, sender, step (u32 each)
//   payload, one continuous bitstream rounded up to whole bytes:
//     b block norms as IEEE-754 binary32 (32 bits each),
//     D sign bits (1 = negative),
//     D levels at level_bits() bits each, LSB first within each byte.
std::vector<uint8_t> serialize(const QuantizedMessage& msg, const QuantizerSpec& spec);
std::pair<QuantizedMessage, QuantizerSpec> deserialize(const std::vector<uint8_t>& bytes);

inline constexpr size_t kWireHeaderBytes = 24;

}  // namespace ofl
