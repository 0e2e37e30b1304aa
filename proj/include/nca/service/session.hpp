#pragma once

// One steering session: a simulation thread that owns the grid and applies
// queued commands between steps. Output goes through a Sink whose callbacks
// are only ever invoked from the session thread.

#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "nca/analysis/resize.hpp"
#include "nca/dynamics.hpp"
#include "nca/image_io.hpp"
#include "nca/service/protocol.hpp"
#include "nca/service/registry.hpp"

namespace nca::service {

struct Sink {
    std::function<void(std::string)> text;
    /// A frame: its "frame" text message and the binary payload.
    std::function<void(std::string, std::vector<std::uint8_t>)> frame;
};

struct SessionOptions {
    std::size_t threads = 1;  // simulation threads
    double max_fps = 60;
    double stats_interval = 0.5;  // seconds
    std::size_t max_cells = 1024 * 1024;
};

class Session {
public:
    using Clock = std::chrono::steady_clock;

    Session(std::shared_ptr<const WeightsRegistry> registry, Sink sink, SessionOptions opt = {})
        : registry_(std::move(registry)), sink_(std::move(sink)), opt_(opt), worker_([this] { run(); }) {}

    Session(const Session&) = delete;
    Session& operator=(const Session&) = delete;
    ~Session() { stop(); }

    /// Queues a client message. Parse errors are reported from the session thread.
    void post(const std::string& text) {
        Item item;
        try {
            item = parse_command(text);
        } catch (const Error& e) {
            item = std::string(e.what());
        }
        {
            std::lock_guard lk(mu_);
            queue_.push_back(std::move(item));
        }
        cv_.notify_one();
    }

    void stop() {
        {
            std::lock_guard lk(mu_);
            stopping_ = true;
        }
        cv_.notify_one();
        std::lock_guard j(join_mu_);
        if (worker_.joinable()) worker_.join();
    }

private:
    using Item = std::variant<Command, std::string>;  // string: parse error

    void run() {
        std::unique_lock lk(mu_);
        while (!stopping_) {
            if (!queue_.empty()) {
                Item item = std::move(queue_.front());
                queue_.pop_front();
                lk.unlock();
                handle(item);
                lk.lock();
                continue;
            }
            if (!sim_ || paused_) {
                cv_.wait(lk, [&] { return stopping_ || !queue_.empty(); });
                continue;
            }
            lk.unlock();
            try {
                step_once();
            } catch (const std::exception& e) {
                sim_.reset();
                sink_.text(error_message(std::string("simulation stopped: ") + e.what()));
            }
            lk.lock();
        }
    }

    void handle(const Item& item) {
        if (const auto* err = std::get_if<std::string>(&item)) {
            sink_.text(error_message(*err));
            return;
        }
        const auto& cmd = std::get<Command>(item);
        try {
            if (!sim_ && !std::holds_alternative<Start>(cmd) && !std::holds_alternative<SetFrameEvery>(cmd))
                throw Error(ErrorKind::usage, std::string(op_name(cmd)) + ": no simulation; send start first");
            std::visit([this](const auto& c) { apply(c); }, cmd);
            json ack{{"op", "ack"}, {"of", op_name(cmd)}};
            if (sim_) {
                ack["step"] = sim_->steps();
                ack["t"] = sim_->time();
            }
            sink_.text(ack.dump());
            if (std::holds_alternative<Snapshot>(cmd)) send_snapshot();
        } catch (const std::exception& e) {
            sink_.text(error_message(std::string(op_name(cmd)) + ": " + e.what()));
        }
    }

    void apply(const Start& s) {
        auto w = registry_->get(s.weights_id);
        if (!w) throw Error(ErrorKind::usage, "unknown weights_id '" + s.weights_id + "'");
        if (s.height * s.width > opt_.max_cells) throw Error(ErrorKind::usage, "grid too large");
        if (s.variant) {
            w->variant = *s.variant;
            w->padding = default_padding(w->variant);
        }
        auto spec = SimSpec<float>::for_weights(std::move(*w), s.height, s.width);
        spec.seed.epsilon = s.eps;
        spec.seed.rng_seed = s.rng_seed;
        spec.mask_rng_seed = s.mask_seed;
        spec.integrator = parse_integrator(s.integrator);
        spec.threads = opt_.threads;
        spec.disc.dt = s.dt;
        spec.check();
        typename Simulator<float>::Options so{spec.integrator, spec.stochastic_mask, spec.mask_rng_seed, spec.threads};
        sim_.emplace(spec.weights, spec.initial(), spec.disc, so);
        spec_ = std::move(spec);
        dt_ = s.dt;
        paused_ = false;
        perturbs_ = 0;
        restart_counters();
    }
    void apply(const SetDt& c) { dt_ = c.value; }
    void apply(const SetCellSize& c) {
        Discretization d = sim_->discretization();
        const std::size_t h = sim_->state().height(), w = sim_->state().width();
        if (c.uniform) {
            d.dx = CellSize(c.dx);
            d.dy = CellSize(c.dy);
        } else {
            d.dx = CellSize(h, w, resize_field(c.dx_field, c.field_h, c.field_w, h, w));
            d.dy = c.dy_field.empty() ? d.dx : CellSize(h, w, resize_field(c.dy_field, c.field_h, c.field_w, h, w));
        }
        sim_->set_discretization(std::move(d));
    }
    void apply(const SetScaleKeyframes& c) {
        Discretization d = sim_->discretization();
        d.time_scale = ScaleKeyframes(c.keys);
        sim_->set_discretization(std::move(d));
    }
    void apply(const Perturb& p) {
        Grid& g = sim_->mutable_state();
        const auto H = static_cast<std::int64_t>(g.height()), W = static_cast<std::int64_t>(g.width());
        const std::uint64_t draw = rng::splitmix64(spec_->seed.rng_seed + 0x9e3779b97f4a7c15ULL * ++perturbs_);
        const auto r = static_cast<std::int64_t>(std::ceil(p.radius));
        const auto cx = static_cast<std::int64_t>(std::floor(p.x)), cy = static_cast<std::int64_t>(std::floor(p.y));
        for (std::int64_t dy = -r; dy <= r; ++dy)
            for (std::int64_t dx = -r; dx <= r; ++dx) {
                if (static_cast<double>(dx * dx + dy * dy) > p.radius * p.radius) continue;
                const auto y = static_cast<std::size_t>(((cy + dy) % H + H) % H);
                const auto x = static_cast<std::size_t>(((cx + dx) % W + W) % W);
                for (std::size_t c = 0; c < g.channels(); ++c)
                    g.at(y, x, c) = p.kind == PerturbKind::zero
                                        ? 0.f
                                        : static_cast<float>(spec_->seed.epsilon *
                                                             (2.0 * rng::uniform(draw, x, y, c) - 1.0));
            }
    }
    void apply(const Pause&) { paused_ = true; }
    void apply(const Resume&) {
        paused_ = false;
        rate_start_ = Clock::now();
        rate_steps_ = sim_->steps();
    }
    void apply(const Reset&) {
        sim_->reset(spec_->initial(), 0);
        perturbs_ = 0;
        restart_counters();
    }
    void apply(const Snapshot&) {}
    void apply(const SetFrameEvery& c) { frame_every_ = c.value; }

    void restart_counters() {
        log_sum_ = 0;
        log_count_ = 0;
        last_frame_ = Clock::time_point{};
        last_stats_ = rate_start_ = Clock::now();
        rate_steps_ = sim_->steps();
        send_frame();
    }

    void step_once() {
        const double rms = sim_->advance(dt_);
        log_sum_ += rms > 0 ? std::log(rms) : std::log(std::numeric_limits<double>::min());
        ++log_count_;
        const auto now = Clock::now();
        if (sim_->steps() % frame_every_ == 0 &&
            now - last_frame_ >= std::chrono::duration<double>(1.0 / opt_.max_fps))
            send_frame();
        if (now - last_stats_ >= std::chrono::duration<double>(opt_.stats_interval)) send_stats(now);
    }

    void send_frame() {
        last_frame_ = Clock::now();
        const Grid& g = sim_->state();
        json meta{{"op", "frame"}, {"seq", frame_seq_++},  {"step", sim_->steps()},   {"t", sim_->time()},
                  {"dt", dt_},     {"width", g.width()}, {"height", g.height()}};
        sink_.frame(meta.dump(), encode_frame(static_cast<std::uint32_t>(g.width()),
                                              static_cast<std::uint32_t>(g.height()), io::to_rgba8(rgb_of(g))));
    }

    void send_stats(Clock::time_point now) {
        const double secs = std::chrono::duration<double>(now - rate_start_).count();
        const double rate = secs > 0 ? static_cast<double>(sim_->steps() - rate_steps_) / secs : 0.0;
        json s{{"op", "stats"},
               {"t", sim_->time()},
               {"step", sim_->steps()},
               {"steps_per_sec", rate},
               {"lambda_running", log_count_ ? log_sum_ / static_cast<double>(log_count_) : 0.0},
               {"dt", dt_},
               {"paused", paused_}};
        sink_.text(s.dump());
        last_stats_ = rate_start_ = now;
        rate_steps_ = sim_->steps();
    }

    void send_snapshot() {
        send_frame();
        const Grid& g = sim_->state();
        json s{{"op", "snapshot"},     {"step", sim_->steps()},   {"t", sim_->time()},
               {"width", g.width()}, {"height", g.height()}, {"png", base64(io::encode_png(rgb_of(g)))}};
        sink_.text(s.dump());
    }

    std::shared_ptr<const WeightsRegistry> registry_;
    Sink sink_;
    SessionOptions opt_;

    std::mutex mu_, join_mu_;
    std::condition_variable cv_;
    std::deque<Item> queue_;
    bool stopping_ = false;

    // owned by the session thread
    std::optional<Simulator<float>> sim_;
    std::optional<SimSpec<float>> spec_;
    double dt_ = 1.0;
    bool paused_ = false;
    std::int64_t frame_every_ = 1;
    std::int64_t frame_seq_ = 0;
    std::uint64_t perturbs_ = 0;
    double log_sum_ = 0;
    std::int64_t log_count_ = 0;
    Clock::time_point last_frame_{}, last_stats_{}, rate_start_{};
    std::int64_t rate_steps_ = 0;

    std::thread worker_;  // last: starts after every member is initialised
};

}  // namespace nca::service
