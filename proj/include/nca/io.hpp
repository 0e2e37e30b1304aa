#pragma once

// Binary formats. All multi-byte values are little-endian.
//
// NCAW weight file (42-byte header):
//   "NCAW" | u32 version=1 | u32 C | u32 D | u8 variant | u8 padding |
//   f32 sobel_divisor | f32 laplacian_divisor | 16 reserved zero bytes
//   then f32 W1 (D x (4C+p), row-major), f32 b1 (D), f32 W2 (C x D, row-major)
//
// NCST state snapshot (28-byte header):
//   "NCST" | u32 version=1 | u32 H | u32 W | u32 C | f64 t | f32 data (y, x, c)

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>
#include <string>
#include <vector>

#include "nca/core.hpp"

namespace nca::io {

inline constexpr char weights_magic[4] = {'N', 'C', 'A', 'W'};
inline constexpr char state_magic[4] = {'N', 'C', 'S', 'T'};
inline constexpr std::uint32_t format_version = 1;
inline constexpr std::size_t weights_header_size = 42;
inline constexpr std::size_t state_header_size = 28;

namespace detail {

class Writer {
public:
    explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}
    void bytes(const void* p, std::size_t n) {
        auto b = static_cast<const std::uint8_t*>(p);
        for (std::size_t i = 0; i < n; ++i) out_.push_back(b[i]);
    }
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f32s(const std::vector<float>& v) {
        for (float x : v) f32(x);
    }

private:
    std::vector<std::uint8_t>& out_;
};

class Reader {
public:
    Reader(const std::uint8_t* p, std::size_t n, const char* what) : p_(p), n_(n), what_(what) {}
    void need(std::size_t k) const {
        if (n_ - pos_ < k) throw Error(ErrorKind::format, std::string(what_) + ": truncated data");
    }
    const std::uint8_t* take(std::size_t k) {
        need(k);
        const std::uint8_t* r = p_ + pos_;
        pos_ += k;
        return r;
    }
    std::uint8_t u8() { return *take(1); }
    std::uint32_t u32() {
        const std::uint8_t* b = take(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const std::uint8_t* b = take(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
        return v;
    }
    float f32() { return std::bit_cast<float>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<float> f32s(std::size_t count) {
        need(count * 4);
        std::vector<float> v(count);
        for (auto& x : v) x = f32();
        return v;
    }
    std::size_t remaining() const { return n_ - pos_; }

private:
    const std::uint8_t* p_;
    std::size_t n_;
    std::size_t pos_ = 0;
    const char* what_;
};

inline std::vector<std::uint8_t> read_all(std::istream& in) {
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline std::vector<std::uint8_t> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    return read_all(in);
}

inline void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "write failed for '" + path + "'");
}

}  // namespace detail

inline std::vector<std::uint8_t> encode_weights(const Weights& w) {
    validate(w);
    std::vector<std::uint8_t> out;
    out.reserve(weights_header_size + 4 * (w.w1.size() + w.b1.size() + w.w2.size()));
    detail::Writer wr(out);
    wr.bytes(weights_magic, 4);
    wr.u32(format_version);
    wr.u32(static_cast<std::uint32_t>(w.channels));
    wr.u32(static_cast<std::uint32_t>(w.hidden));
    wr.u8(static_cast<std::uint8_t>(w.variant));
    wr.u8(static_cast<std::uint8_t>(w.padding));
    wr.f32(w.sobel_divisor);
    wr.f32(w.laplacian_divisor);
    for (int i = 0; i < 16; ++i) wr.u8(0);
    wr.f32s(w.w1);
    wr.f32s(w.b1);
    wr.f32s(w.w2);
    return out;
}

inline Weights decode_weights(const std::uint8_t* data, std::size_t size) {
    detail::Reader rd(data, size, "NCAW");
    if (std::memcmp(rd.take(4), weights_magic, 4) != 0) throw Error(ErrorKind::format, "NCAW: bad magic");
    if (rd.u32() != format_version) throw Error(ErrorKind::format, "NCAW: unsupported version");
    Weights w;
    w.channels = rd.u32();
    w.hidden = rd.u32();
    const std::uint8_t variant = rd.u8(), padding = rd.u8();
    if (variant > 2) throw Error(ErrorKind::format, "NCAW: unknown variant code");
    if (padding > 1) throw Error(ErrorKind::format, "NCAW: unknown padding code");
    w.variant = static_cast<Variant>(variant);
    w.padding = static_cast<Padding>(padding);
    w.sobel_divisor = rd.f32();
    w.laplacian_divisor = rd.f32();
    rd.take(16);  // reserved
    if (w.channels > (1u << 16) || w.hidden > (1u << 20)) throw Error(ErrorKind::format, "NCAW: implausible C/D");
    w.w1 = rd.f32s(w.hidden * w.input_width());
    w.b1 = rd.f32s(w.hidden);
    w.w2 = rd.f32s(w.channels * w.hidden);
    validate(w);
    return w;
}

inline Weights decode_weights(const std::vector<std::uint8_t>& bytes) {
    return decode_weights(bytes.data(), bytes.size());
}

inline void save_weights(const Weights& w, std::ostream& out) {
    const auto bytes = encode_weights(w);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "NCAW: write failed");
}
inline Weights load_weights(std::istream& in) { return decode_weights(detail::read_all(in)); }
inline void save_weights(const Weights& w, const std::string& path) { detail::write_file(path, encode_weights(w)); }
inline Weights load_weights(const std::string& path) { return decode_weights(detail::read_file(path)); }

inline std::vector<std::uint8_t> encode_state(const Grid& g) {
    std::vector<std::uint8_t> out;
    out.reserve(state_header_size + 4 * g.data().size());
    detail::Writer wr(out);
    wr.bytes(state_magic, 4);
    wr.u32(format_version);
    wr.u32(static_cast<std::uint32_t>(g.height()));
    wr.u32(static_cast<std::uint32_t>(g.width()));
    wr.u32(static_cast<std::uint32_t>(g.channels()));
    wr.f64(g.time());
    for (float v : g.data()) wr.f32(v);
    return out;
}

inline Grid decode_state(const std::uint8_t* data, std::size_t size) {
    detail::Reader rd(data, size, "NCST");
    if (std::memcmp(rd.take(4), state_magic, 4) != 0) throw Error(ErrorKind::format, "NCST: bad magic");
    if (rd.u32() != format_version) throw Error(ErrorKind::format, "NCST: unsupported version");
    const std::size_t h = rd.u32(), w = rd.u32(), c = rd.u32();
    const double t = rd.f64();
    if (h > (1u << 16) || w > (1u << 16) || c > (1u << 16)) throw Error(ErrorKind::format, "NCST: implausible shape");
    auto values = rd.f32s(h * w * c);
    return Grid(h, w, c, std::move(values), t);
}

inline Grid decode_state(const std::vector<std::uint8_t>& bytes) { return decode_state(bytes.data(), bytes.size()); }

inline void save_state(const Grid& g, std::ostream& out) {
    const auto bytes = encode_state(g);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(ErrorKind::io, "NCST: write failed");
}
inline Grid load_state(std::istream& in) { return decode_state(detail::read_all(in)); }
inline void save_state(const Grid& g, const std::string& path) { detail::write_file(path, encode_state(g)); }
inline Grid load_state(const std::string& path) { return decode_state(detail::read_file(path)); }

/// Rejects a snapshot that cannot be driven by `w`.
inline void check_state_for(const Grid& g, const Weights& w) {
    if (g.channels() != w.channels)
        throw Error(ErrorKind::shape, "snapshot has " + std::to_string(g.channels()) + " channels, weights expect " +
                                          std::to_string(w.channels));
}

}  // namespace nca::io
