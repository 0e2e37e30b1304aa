#pragma once

// Steering protocol. Clients send JSON text messages, one command each:
//
//   {"op":"start", "weights_id":ID, "size":"HxW"|[H,W]|N, "variant":V, "eps":E,
//    "rng_seed":N, "mask_seed":N, "dt":V, "integrator":"euler"|"rk4"}
//   {"op":"set_dt", "value":V}
//   {"op":"set_cell_size", "mode":"uniform", "dx":V, "dy":V}
//   {"op":"set_cell_size", "mode":"field", "width":w, "height":h, "dx":[...], "dy":[...]}
//   {"op":"set_scale_keyframes", "keyframes":[[t,m],...] | "t:m,..."}
//   {"op":"perturb", "x":X, "y":Y, "radius":R, "kind":"reseed_noise"|"zero"}
//   {"op":"pause"} {"op":"resume"} {"op":"reset"} {"op":"snapshot"}
//   {"op":"set_frame_every", "value":K}
//
// The server answers with text messages
//   {"op":"ack", "of":OP, "step":N, "t":T}      command applied after step N
//   {"op":"frame", "seq":N, "step":N, "t":T, "dt":V, "width":W, "height":H}
//   {"op":"stats", "t":T, "step":N, "steps_per_sec":R, "lambda_running":L, "dt":V, "paused":B}
//   {"op":"snapshot", "step":N, "t":T, "width":W, "height":H, "png":BASE64}
//   {"op":"error", "message":TEXT}
// and binary frames (u32 LE width | u32 LE height | RGBA8 rows). Every
// binary frame directly follows its "frame" text message.

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/transform_width.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "nca/core.hpp"
#include "nca/scale.hpp"

namespace nca::service {

using nlohmann::json;

struct Start {
    std::string weights_id;
    std::size_t height = 128, width = 128;
    std::optional<Variant> variant;
    double eps = 0.25;
    std::uint64_t rng_seed = 0;
    std::uint64_t mask_seed = 0;
    double dt = 1.0;
    std::string integrator = "euler";
};
struct SetDt {
    double value;
};
struct SetCellSize {
    bool uniform = true;
    double dx = 1, dy = 1;
    std::size_t field_h = 0, field_w = 0;
    std::vector<double> dx_field, dy_field;  // empty dy_field: same as dx
};
struct SetScaleKeyframes {
    std::vector<std::pair<double, double>> keys;
};
enum class PerturbKind { reseed_noise, zero };
struct Perturb {
    double x, y, radius;
    PerturbKind kind = PerturbKind::reseed_noise;
};
struct Pause {};
struct Resume {};
struct Reset {};
struct Snapshot {};
struct SetFrameEvery {
    std::int64_t value;
};

using Command = std::variant<Start, SetDt, SetCellSize, SetScaleKeyframes, Perturb, Pause, Resume, Reset, Snapshot,
                             SetFrameEvery>;

inline const char* op_name(const Command& c) {
    static constexpr const char* names[] = {"start", "set_dt",  "set_cell_size", "set_scale_keyframes",
                                            "perturb", "pause", "resume",        "reset",
                                            "snapshot", "set_frame_every"};
    return names[c.index()];
}

namespace detail {

inline Error bad(const std::string& m) { return Error(ErrorKind::usage, m); }

inline double positive(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw bad(std::string("'") + key + "' must be a number");
    const double v = j[key].get<double>();
    if (!(v > 0) || !std::isfinite(v)) throw bad(std::string("'") + key + "' must be finite and > 0");
    return v;
}

inline std::pair<std::size_t, std::size_t> parse_size(const json& j) {
    auto dim = [](const json& v) {
        if (!v.is_number_integer() || v.get<std::int64_t>() < 3 || v.get<std::int64_t>() > 4096)
            throw bad("size entries must be integers in [3, 4096]");
        return static_cast<std::size_t>(v.get<std::int64_t>());
    };
    if (j.is_number()) return {dim(j), dim(j)};
    if (j.is_array() && j.size() == 2) return {dim(j[0]), dim(j[1])};
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        const auto x = s.find('x');
        if (x != std::string::npos) {
            try {
                return {dim(json(std::stoll(s.substr(0, x)))), dim(json(std::stoll(s.substr(x + 1))))};
            } catch (const Error&) {
                throw;
            } catch (...) {
            }
        }
    }
    throw bad("size must be \"HxW\", [H, W] or N");
}

inline std::vector<double> field(const json& j, const char* key, std::size_t n) {
    if (!j.contains(key) || !j[key].is_array() || j[key].size() != n)
        throw bad(std::string("'") + key + "' must be an array of width*height numbers");
    std::vector<double> v;
    v.reserve(n);
    for (const auto& e : j[key]) {
        if (!e.is_number()) throw bad(std::string("'") + key + "' must hold numbers");
        const double d = e.get<double>();
        if (!(d > 0) || !std::isfinite(d)) throw bad("cell sizes must be finite and > 0");
        v.push_back(d);
    }
    return v;
}

}  // namespace detail

/// Parses one client message. Throws Error(usage) with a readable reason.
inline Command parse_command(const std::string& text) {
    using detail::bad;
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw bad(std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object() || !j.contains("op") || !j["op"].is_string()) throw bad("message needs a string 'op'");
    const auto op = j["op"].get<std::string>();
    try {
        if (op == "start") {
            Start s;
            if (!j.contains("weights_id") || !j["weights_id"].is_string()) throw bad("start needs 'weights_id'");
            s.weights_id = j["weights_id"].get<std::string>();
            if (j.contains("size")) std::tie(s.height, s.width) = detail::parse_size(j["size"]);
            if (j.contains("variant") && !j["variant"].is_null()) s.variant = parse_variant(j["variant"].get<std::string>());
            if (j.contains("eps")) s.eps = detail::positive(j, "eps");
            if (j.contains("rng_seed")) s.rng_seed = j["rng_seed"].get<std::uint64_t>();
            if (j.contains("mask_seed")) s.mask_seed = j["mask_seed"].get<std::uint64_t>();
            if (j.contains("dt")) s.dt = detail::positive(j, "dt");
            if (j.contains("integrator")) s.integrator = j["integrator"].get<std::string>();
            return s;
        }
        if (op == "set_dt") return SetDt{detail::positive(j, "value")};
        if (op == "set_cell_size") {
            SetCellSize c;
            const std::string mode = j.value("mode", "uniform");
            if (mode == "uniform") {
                c.dx = detail::positive(j, "dx");
                c.dy = j.contains("dy") ? detail::positive(j, "dy") : c.dx;
            } else if (mode == "field") {
                c.uniform = false;
                const double w = detail::positive(j, "width"), h = detail::positive(j, "height");
                if (w != std::floor(w) || h != std::floor(h) || w * h > 1 << 22)
                    throw bad("field width/height must be small integers");
                c.field_w = static_cast<std::size_t>(w);
                c.field_h = static_cast<std::size_t>(h);
                c.dx_field = detail::field(j, "dx", c.field_w * c.field_h);
                if (j.contains("dy")) c.dy_field = detail::field(j, "dy", c.field_w * c.field_h);
            } else {
                throw bad("set_cell_size mode must be 'uniform' or 'field'");
            }
            return c;
        }
        if (op == "set_scale_keyframes") {
            SetScaleKeyframes k;
            if (!j.contains("keyframes")) throw bad("set_scale_keyframes needs 'keyframes'");
            const auto& kf = j["keyframes"];
            if (kf.is_string()) {
                k.keys = parse_keyframes(kf.get<std::string>()).keys();
            } else if (kf.is_array()) {
                for (const auto& e : kf) {
                    if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number())
                        throw bad("keyframes must be [[t, m], ...]");
                    k.keys.emplace_back(e[0].get<double>(), e[1].get<double>());
                }
                ScaleKeyframes check(k.keys);
            } else {
                throw bad("keyframes must be an array or a \"t:m,...\" string");
            }
            return k;
        }
        if (op == "perturb") {
            Perturb p;
            for (const char* key : {"x", "y"})
                if (!j.contains(key) || !j[key].is_number()) throw bad(std::string("perturb needs numeric '") + key + "'");
            p.x = j["x"].get<double>();
            p.y = j["y"].get<double>();
            p.radius = detail::positive(j, "radius");
            const std::string kind = j.value("kind", "reseed_noise");
            if (kind == "reseed_noise")
                p.kind = PerturbKind::reseed_noise;
            else if (kind == "zero")
                p.kind = PerturbKind::zero;
            else
                throw bad("perturb kind must be 'reseed_noise' or 'zero'");
            return p;
        }
        if (op == "pause") return Pause{};
        if (op == "resume") return Resume{};
        if (op == "reset") return Reset{};
        if (op == "snapshot") return Snapshot{};
        if (op == "set_frame_every") {
            if (!j.contains("value") || !j["value"].is_number_integer() || j["value"].get<std::int64_t>() < 1)
                throw bad("set_frame_every needs an integer 'value' >= 1");
            return SetFrameEvery{j["value"].get<std::int64_t>()};
        }
    } catch (const json::exception& e) {
        throw bad(op + ": " + e.what());
    }
    throw bad("unknown op '" + op + "'");
}

inline std::string error_message(const std::string& what) { return json{{"op", "error"}, {"message", what}}.dump(); }

/// u32 LE width | u32 LE height | RGBA8.
inline std::vector<std::uint8_t> encode_frame(std::uint32_t width, std::uint32_t height,
                                              const std::vector<std::uint8_t>& rgba) {
    if (rgba.size() != std::size_t{width} * height * 4) throw Error(ErrorKind::shape, "RGBA payload size mismatch");
    std::vector<std::uint8_t> out(8 + rgba.size());
    for (int i = 0; i < 4; ++i) {
        out[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(width >> (8 * i));
        out[static_cast<std::size_t>(4 + i)] = static_cast<std::uint8_t>(height >> (8 * i));
    }
    std::copy(rgba.begin(), rgba.end(), out.begin() + 8);
    return out;
}

struct Frame {
    std::uint32_t width = 0, height = 0;
    std::vector<std::uint8_t> rgba;
};

inline Frame decode_frame(const std::uint8_t* data, std::size_t size) {
    if (size < 8) throw Error(ErrorKind::format, "frame shorter than its header");
    Frame f;
    for (int i = 0; i < 4; ++i) {
        f.width |= static_cast<std::uint32_t>(data[i]) << (8 * i);
        f.height |= static_cast<std::uint32_t>(data[4 + i]) << (8 * i);
    }
    if (size - 8 != std::size_t{f.width} * f.height * 4) throw Error(ErrorKind::format, "frame payload size mismatch");
    f.rgba.assign(data + 8, data + size);
    return f;
}

inline std::string base64(const std::vector<std::uint8_t>& bytes) {
    using namespace boost::archive::iterators;
    using It = base64_from_binary<transform_width<std::vector<std::uint8_t>::const_iterator, 6, 8>>;
    std::string out(It(bytes.begin()), It(bytes.end()));
    out.append((3 - bytes.size() % 3) % 3, '=');
    return out;
}

}  // namespace nca::service
