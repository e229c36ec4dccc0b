#include "ofl/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

namespace ofl {

void QuantizerSpec::validate() const {
    if (dim < 1) throw std::invalid_argument("quantizer: dim must be >= 1");
    if (levels < 1) throw std::invalid_argument("quantizer: levels must be >= 1");
    if (blocks < 1 || blocks > dim)
        throw std::invalid_argument("quantizer: blocks must satisfy 1 <= b <= D");
}

int QuantizerSpec::block_begin(int block) const {
    const int base = dim / blocks;
    const int rem = dim % blocks;
    // Blocks [0, rem) are one longer.
    return block * base + std::min(block, rem);
}

int QuantizerSpec::block_end(int block) const { return block_begin(block + 1); }

int QuantizerSpec::max_block_size() const { return (dim + blocks - 1) / blocks; }

double QuantizerSpec::variance_bound() const {
    const double m = static_cast<double>(max_block_size());
    const double s = static_cast<double>(levels);
    return std::min(m / (s * s), std::sqrt(m) / s);
}

double QuantizerSpec::nominal_bits() const {
    return 32.0 * blocks + dim * (1.0 + std::log2(static_cast<double>(levels) + 1.0));
}

int QuantizerSpec::level_bits() const {
    return std::bit_width(static_cast<unsigned>(levels));  // ceil(log2(s+1))
}

int64_t QuantizerSpec::wire_payload_bits() const {
    return 32ll * blocks + static_cast<int64_t>(dim) * (1 + level_bits());
}

QuantizedMessage quantize(const QuantizerSpec& spec, const ParameterVector& u, RngStream& rng,
                          uint32_t sender, uint32_t step) {
    spec.validate();
    if (static_cast<int>(u.size()) != spec.dim)
        throw std::invalid_argument("quantize: vector dimension mismatch");
    ensure_finite(u, "quantize input");

    QuantizedMessage msg;
    msg.block_norms.resize(spec.blocks);
    msg.signs.assign(spec.dim, 1);
    msg.levels.assign(spec.dim, 0);
    msg.nominal_bits = spec.nominal_bits();
    msg.sender = sender;
    msg.step = step;

    const int s = spec.levels;
    for (int l = 0; l < spec.blocks; ++l) {
        const int begin = spec.block_begin(l);
        const int end = spec.block_end(l);
        double sq = 0.0;
        for (int i = begin; i < end; ++i) sq += u[i] * u[i];
        const float nf = static_cast<float>(std::sqrt(sq));
        msg.block_norms[l] = nf;
        if (nf == 0.0f) continue;  // whole block decodes to zero, no draws

        const double n = static_cast<double>(nf);
        for (int i = begin; i < end; ++i) {
            msg.signs[i] = u[i] < 0.0 ? -1 : 1;
            const double r = std::min(std::abs(u[i]) / n, 1.0);
            int m = std::min(static_cast<int>(r * s), s - 1);
            const double p_up = r * s - m;
            if (p_up > 0.0 && rng.next_double() < p_up) ++m;
            msg.levels[i] = static_cast<uint16_t>(m);
        }
    }
    return msg;
}

ParameterVector dequantize(const QuantizedMessage& msg, const QuantizerSpec& spec) {
    spec.validate();
    if (static_cast<int>(msg.block_norms.size()) != spec.blocks)
        throw std::invalid_argument("dequantize: block count mismatch");
    if (static_cast<int>(msg.signs.size()) != spec.dim ||
        static_cast<int>(msg.levels.size()) != spec.dim)
        throw std::invalid_argument("dequantize: coordinate count mismatch");

    ParameterVector out(spec.dim, 0.0);
    const double s = static_cast<double>(spec.levels);
    for (int l = 0; l < spec.blocks; ++l) {
        const double n = static_cast<double>(msg.block_norms[l]);
        for (int i = spec.block_begin(l); i < spec.block_end(l); ++i) {
            if (msg.levels[i] > spec.levels)
                throw std::invalid_argument("dequantize: level exceeds s");
            out[i] = n * msg.signs[i] * (msg.levels[i] / s);
        }
    }
    return out;
}

namespace {

constexpr uint32_t kMagic = 0x4F464C51u;  // "QLFO" little-endian, reads as OFLQ

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 24) & 0xFF);
}

uint32_t get_u32(const std::vector<uint8_t>& in, size_t offset) {
    return static_cast<uint32_t>(in[offset]) | (static_cast<uint32_t>(in[offset + 1]) << 8) |
           (static_cast<uint32_t>(in[offset + 2]) << 16) |
           (static_cast<uint32_t>(in[offset + 3]) << 24);
}

// LSB-first bit packing within bytes.
class BitWriter {
public:
    explicit BitWriter(std::vector<uint8_t>& out) : out_(out) {}
    void put(uint64_t value, int bits) {
        for (int i = 0; i < bits; ++i) {
            if (pos_ == 0) out_.push_back(0);
            if ((value >> i) & 1ull) out_.back() |= static_cast<uint8_t>(1u << pos_);
            pos_ = (pos_ + 1) & 7;
        }
    }

private:
    std::vector<uint8_t>& out_;
    int pos_ = 0;
};

class BitReader {
public:
    BitReader(const std::vector<uint8_t>& in, size_t byte_offset)
        : in_(in), byte_(byte_offset) {}
    uint64_t get(int bits) {
        uint64_t v = 0;
        for (int i = 0; i < bits; ++i) {
            if (byte_ >= in_.size()) throw std::runtime_error("deserialize: truncated payload");
            if ((in_[byte_] >> pos_) & 1u) v |= 1ull << i;
            pos_ = (pos_ + 1) & 7;
            if (pos_ == 0) ++byte_;
        }
        return v;
    }

private:
    const std::vector<uint8_t>& in_;
    size_t byte_;
    int pos_ = 0;
};

}  // namespace

std::vector<uint8_t> serialize(const QuantizedMessage& msg, const QuantizerSpec& spec) {
    spec.validate();
    if (static_cast<int>(msg.block_norms.size()) != spec.blocks ||
        static_cast<int>(msg.signs.size()) != spec.dim ||
        static_cast<int>(msg.levels.size()) != spec.dim)
        throw std::invalid_argument("serialize: message inconsistent with spec");

    std::vector<uint8_t> out;
    out.reserve(kWireHeaderBytes + (spec.wire_payload_bits() + 7) / 8);
    put_u32(out, kMagic);
    put_u32(out, static_cast<uint32_t>(spec.dim));
    put_u32(out, static_cast<uint32_t>(spec.blocks));
    put_u32(out, static_cast<uint32_t>(spec.levels));
    put_u32(out, msg.sender);
    put_u32(out, msg.step);

    BitWriter w(out);
    for (float n : msg.block_norms) {
        uint32_t bits;
        std::memcpy(&bits, &n, sizeof(bits));
        w.put(bits, 32);
    }
    for (int8_t sgn : msg.signs) w.put(sgn < 0 ? 1 : 0, 1);
    const int lb = spec.level_bits();
    for (uint16_t lev : msg.levels) w.put(lev, lb);
    return out;
}

std::pair<QuantizedMessage, QuantizerSpec> deserialize(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < kWireHeaderBytes) throw std::runtime_error("deserialize: truncated header");
    if (get_u32(bytes, 0) != kMagic) throw std::runtime_error("deserialize: bad magic");

    QuantizerSpec spec;
    spec.dim = static_cast<int>(get_u32(bytes, 4));
    spec.blocks = static_cast<int>(get_u32(bytes, 8));
    spec.levels = static_cast<int>(get_u32(bytes, 12));
    spec.validate();

    QuantizedMessage msg;
    msg.sender = get_u32(bytes, 16);
    msg.step = get_u32(bytes, 20);
    msg.nominal_bits = spec.nominal_bits();

    const size_t expected = kWireHeaderBytes + (spec.wire_payload_bits() + 7) / 8;
    if (bytes.size() != expected) throw std::runtime_error("deserialize: payload length mismatch");

    BitReader r(bytes, kWireHeaderBytes);
    msg.block_norms.resize(spec.blocks);
    for (int l = 0; l < spec.blocks; ++l) {
        const uint32_t bits = static_cast<uint32_t>(r.get(32));
        float n;
        std::memcpy(&n, &bits, sizeof(n));
        if (!(n >= 0.0f) || !std::isfinite(n)) throw std::runtime_error("deserialize: bad norm");
        msg.block_norms[l] = n;
    }
    msg.signs.resize(spec.dim);
    for (int i = 0; i < spec.dim; ++i) msg.signs[i] = r.get(1) ? -1 : 1;
    const int lb = spec.level_bits();
    msg.levels.resize(spec.dim);
    for (int i = 0; i < spec.dim; ++i) {
        const uint64_t lev = r.get(lb);
        if (lev > static_cast<uint64_t>(spec.levels))
            throw std::runtime_error("deserialize: level exceeds s");
        msg.levels[i] = static_cast<uint16_t>(lev);
    }
    return {std::move(msg), spec};
}

}  // namespace ofl
