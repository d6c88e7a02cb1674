#pragma once

// Model checkpoint file. Layout:
//   bytes 0..7   magic "MRLCKPT\n"
//   u32          format version (currently 1)
//   u32          role length, then role bytes (e.g. "embedding", "policy")
//   u64          training seed
//   u32          layer count, then per layer: u32 out, u32 in, u32 activation
//   payload      per layer: weight row-major then bias, little-endian f64
// Exact round-trip is guaranteed: doubles are stored bit-for-bit.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>

#include "metricrl/errors.hpp"
#include "metricrl/mlp.hpp"
#include "metricrl/textio.hpp"

namespace metricrl {

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    put_u64(out, bits);
}

struct Reader {
    const std::string& data;
    std::size_t pos = 0;
    std::string origin;

    void need(std::size_t n) const {
        if (pos + n > data.size()) throw DataError(origin + ": truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data[pos + i])) << (8 * i);
        pos += 8;
        return v;
    }
    double f64() {
        std::uint64_t bits = u64();
        double d;
        std::memcpy(&d, &bits, sizeof(d));
        return d;
    }
    std::string bytes(std::size_t n) {
        need(n);
        std::string s = data.substr(pos, n);
        pos += n;
        return s;
    }
};

}  // namespace detail

inline constexpr char kCheckpointMagic[8] = {'M', 'R', 'L', 'C', 'K', 'P', 'T', '\n'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    std::string role;
    std::uint64_t seed = 0;
    MlpParams params;
};

inline std::string encode_checkpoint(const Checkpoint& ck) {
    std::string out(kCheckpointMagic, 8);
    detail::put_u32(out, kCheckpointVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.role.size()));
    out += ck.role;
    detail::put_u64(out, ck.seed);
    detail::put_u32(out, static_cast<std::uint32_t>(ck.params.layers.size()));
    for (const auto& l : ck.params.layers) {
        detail::put_u32(out, static_cast<std::uint32_t>(l.weight.rows));
        detail::put_u32(out, static_cast<std::uint32_t>(l.weight.cols));
        detail::put_u32(out, static_cast<std::uint32_t>(l.act));
    }
    for (const auto& l : ck.params.layers) {
        for (double v : l.weight.data) detail::put_f64(out, v);
        for (double v : l.bias) detail::put_f64(out, v);
    }
    return out;
}

inline Checkpoint decode_checkpoint(const std::string& data, const std::string& origin) {
    if (data.size() < 8 || std::memcmp(data.data(), kCheckpointMagic, 8) != 0)
        throw DataError(origin + ": not a checkpoint file (bad magic)");
    detail::Reader r{data, 8, origin};
    const std::uint32_t version = r.u32();
    if (version != kCheckpointVersion)
        throw DataError(origin + ": unsupported checkpoint version " + std::to_string(version));
    Checkpoint ck;
    ck.role = r.bytes(r.u32());
    ck.seed = r.u64();
    const std::uint32_t n_layers = r.u32();
    std::vector<std::pair<int, int>> shapes;
    for (std::uint32_t i = 0; i < n_layers; ++i) {
        const int out_w = static_cast<int>(r.u32());
        const int in_w = static_cast<int>(r.u32());
        const auto act = static_cast<Activation>(r.u32());
        MlpLayer layer;
        layer.weight = Matrix(out_w, in_w);
        layer.bias.assign(static_cast<std::size_t>(out_w), 0.0);
        layer.act = act;
        ck.params.layers.push_back(std::move(layer));
    }
    for (auto& l : ck.params.layers) {
        for (auto& v : l.weight.data) v = r.f64();
        for (auto& v : l.bias) v = r.f64();
    }
    if (r.pos != data.size()) throw DataError(origin + ": trailing bytes in checkpoint");
    validate_chain(ck.params);
    return ck;
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    atomic_write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path), path.string());
}

}  // namespace metricrl
