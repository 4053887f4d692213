#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ianforge/mlp.hpp"
#include "ianforge/tensor.hpp"

namespace ianforge {

// CRC-32 (IEEE 802.3, reflected, poly 0xEDB88320).
inline std::uint32_t crc32(const unsigned char* data, std::size_t len, std::uint32_t crc = 0) {
    static const auto table = [] {
        std::array<std::uint32_t, 256> t{};
        for (std::uint32_t i = 0; i < 256; ++i) {
            std::uint32_t c = i;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
            t[i] = c;
        }
        return t;
    }();
    crc = ~crc;
    for (std::size_t i = 0; i < len; ++i) crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
    return ~crc;
}

namespace detail {

inline void put_u16(std::string& out, std::uint16_t v) {
    out.push_back(static_cast<char>(v & 0xFF));
    out.push_back(static_cast<char>((v >> 8) & 0xFF));
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

inline void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

struct Reader {
    const unsigned char* p;
    const unsigned char* end;

    bool done() const { return p >= end; }

    std::uint16_t u16() {
        need(2);
        std::uint16_t v = static_cast<std::uint16_t>(p[0] | (p[1] << 8));
        p += 2;
        return v;
    }

    std::uint8_t u8() {
        need(1);
        return *p++;
    }

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        p += 4;
        return v;
    }

    float f32() {
        const std::uint32_t bits = u32();
        float v;
        std::memcpy(&v, &bits, 4);
        return v;
    }

    std::string bytes(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(p), n);
        p += n;
        return s;
    }

    void need(std::size_t n) const {
        if (p + n > end) throw std::runtime_error("checkpoint: truncated file");
    }
};

}  // namespace detail

constexpr char kCheckpointMagic[5] = {'K', 'G', 'A', 'N', '1'};

// KGAN1 container: magic, then per tensor u16 name length, name bytes,
// u8 ndim, u32 dims, float32 little-endian row-major payload; trailing CRC32
// over everything before it.
inline void save_tensors(const std::string& path, const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::string body(kCheckpointMagic, 5);
    for (const auto& [name, t] : tensors) {
        if (name.size() > 0xFFFF) throw std::invalid_argument("checkpoint: tensor name too long");
        if (t.shape.size() > 0xFF) throw std::invalid_argument("checkpoint: too many dimensions");
        detail::put_u16(body, static_cast<std::uint16_t>(name.size()));
        body.append(name);
        body.push_back(static_cast<char>(t.shape.size()));
        for (int d : t.shape) detail::put_u32(body, static_cast<std::uint32_t>(d));
        for (double v : t.data) detail::put_f32(body, static_cast<float>(v));
    }
    detail::put_u32(body, crc32(reinterpret_cast<const unsigned char*>(body.data()), body.size()));
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write '" + path + "'");
    out.write(body.data(), static_cast<std::streamsize>(body.size()));
    if (!out) throw std::runtime_error("checkpoint: write failed for '" + path + "'");
}

inline std::vector<std::pair<std::string, Tensor>> load_tensors(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("checkpoint: cannot read '" + path + "'");
    std::string body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (body.size() < 9) throw std::runtime_error("checkpoint: file too small: '" + path + "'");
    if (std::memcmp(body.data(), kCheckpointMagic, 5) != 0)
        throw std::runtime_error("checkpoint: bad magic in '" + path + "'");

    const std::size_t payload = body.size() - 4;
    detail::Reader tail{reinterpret_cast<const unsigned char*>(body.data()) + payload,
                        reinterpret_cast<const unsigned char*>(body.data()) + body.size()};
    const std::uint32_t stored = tail.u32();
    const std::uint32_t computed = crc32(reinterpret_cast<const unsigned char*>(body.data()), payload);
    if (stored != computed) throw std::runtime_error("checkpoint: CRC mismatch in '" + path + "'");

    detail::Reader r{reinterpret_cast<const unsigned char*>(body.data()) + 5,
                     reinterpret_cast<const unsigned char*>(body.data()) + payload};
    std::vector<std::pair<std::string, Tensor>> tensors;
    while (!r.done()) {
        const std::uint16_t nlen = r.u16();
        std::string name = r.bytes(nlen);
        const int ndim = r.u8();
        Shape shape(static_cast<std::size_t>(ndim));
        for (auto& d : shape) d = static_cast<int>(r.u32());
        const auto n = numel(shape);
        std::vector<double> data(static_cast<std::size_t>(n));
        for (auto& v : data) v = static_cast<double>(r.f32());
        tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
    }
    return tensors;
}

// ---- whole-network save/load ----------------------------------------------

inline void save_networks(const std::string& path, const std::vector<const NetworkParams*>& nets) {
    std::vector<std::pair<std::string, Tensor>> flat;
    for (const auto* net : nets)
        for (const auto& [lname, t] : net->tensors) flat.emplace_back(net->name + "/" + lname, t);
    save_tensors(path, flat);
}

// Tensors for one network prefix, in file order, with the prefix stripped.
inline std::vector<std::pair<std::string, Tensor>> tensors_for(
    const std::vector<std::pair<std::string, Tensor>>& flat, const std::string& net_name) {
    std::vector<std::pair<std::string, Tensor>> out;
    const std::string prefix = net_name + "/";
    for (const auto& [name, t] : flat)
        if (name.rfind(prefix, 0) == 0) out.emplace_back(name.substr(prefix.size()), t);
    return out;
}

// Rebuilds layer widths from the W tensors of one network.
inline std::vector<int> widths_from_tensors(const std::vector<std::pair<std::string, Tensor>>& tensors) {
    std::vector<int> widths;
    for (std::size_t l = 0;; ++l) {
        const std::string w_name = "W" + std::to_string(l);
        auto it = std::find_if(tensors.begin(), tensors.end(), [&](const auto& p) { return p.first == w_name; });
        if (it == tensors.end()) break;
        if (widths.empty()) widths.push_back(it->second.shape[0]);
        widths.push_back(it->second.shape[1]);
    }
    if (widths.size() < 2) throw std::runtime_error("checkpoint: no layers found for network");
    return widths;
}

// Reassembles a network from checkpoint tensors, validating against spec.
inline NetworkParams network_from_tensors(const std::string& name, const MlpSpec& spec,
                                          const std::vector<std::pair<std::string, Tensor>>& tensors) {
    NetworkParams p;
    p.name = name;
    p.spec = spec;
    for (int l = 0; l < spec.transitions(); ++l) {
        const int in = spec.layer_widths[static_cast<std::size_t>(l)];
        const int out = spec.layer_widths[static_cast<std::size_t>(l) + 1];
        for (const auto& lname : {"W" + std::to_string(l), "b" + std::to_string(l)}) {
            auto it =
                std::find_if(tensors.begin(), tensors.end(), [&](const auto& q) { return q.first == lname; });
            if (it == tensors.end())
                throw std::runtime_error("checkpoint: network '" + name + "' is missing tensor '" + lname + "'");
            const Shape expect = lname[0] == 'W' ? Shape{in, out} : Shape{out};
            if (!same_shape(it->second.shape, expect))
                throw std::runtime_error("checkpoint: network '" + name + "' tensor '" + lname +
                                         "' has shape " + shape_str(it->second.shape) + ", expected " +
                                         shape_str(expect));
            p.tensors.emplace_back(lname, it->second);
        }
    }
    return p;
}

}  // namespace ianforge
