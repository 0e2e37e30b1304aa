#pragma once

// Seeds, stochastic update masks, time-step schedulers and the Euler / RK4
// integrators that advance S(t) under dS/dt = f(S, grad_x S, grad_y S, lap S).

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nca/adaptation.hpp"
#include "nca/core.hpp"
#include "nca/parallel.hpp"
#include "nca/perception.hpp"
#include "nca/rng.hpp"

namespace nca {

enum class SeedMode { zero, uniform_noise };

struct SeedSpec {
    SeedMode mode = SeedMode::zero;
    double epsilon = 0.25;
    std::uint64_t rng_seed = 0;
};

/// Fills `g` with values drawn from U[-eps, eps], keyed by (seed, x, y, channel).
template <std::floating_point T>
void fill_noise(CellGrid<T>& g, double eps, std::uint64_t seed, std::size_t y0, std::size_t y1, std::size_t x0,
                std::size_t x1) {
    for (std::size_t y = y0; y < y1; ++y)
        for (std::size_t x = x0; x < x1; ++x)
            for (std::size_t c = 0; c < g.channels(); ++c)
                g.at(y, x, c) = static_cast<T>(-eps + 2.0 * eps * rng::uniform(seed, x, y, c));
}

template <std::floating_point T = float>
CellGrid<T> make_seed(std::size_t height, std::size_t width, std::size_t channels, const SeedSpec& spec) {
    CellGrid<T> g(height, width, channels);
    if (spec.mode == SeedMode::uniform_noise) {
        if (!(spec.epsilon > 0) || !std::isfinite(spec.epsilon))
            throw Error(ErrorKind::validation, "noise seed needs epsilon > 0");
        fill_noise(g, spec.epsilon, spec.rng_seed, 0, height, 0, width);
    }
    return g;
}

/// Time step as a function of simulation time.
struct StepScheduler {
    enum class Kind { constant, piecewise_ab };
    Kind kind = Kind::constant;
    double dt_before = 1.0;
    double dt_after = 0.1;
    double t_crit = 0.0;

    static StepScheduler constant() { return {}; }
    /// 1.0 before t_crit, 0.1 after.
    static StepScheduler policy_a(double t_crit) { return {Kind::piecewise_ab, 1.0, 0.1, t_crit}; }
    /// 0.1 before t_crit, 1.0 after.
    static StepScheduler policy_b(double t_crit) { return {Kind::piecewise_ab, 0.1, 1.0, t_crit}; }

    /// Step size for a step starting at t. `base_dt` is the constant step.
    double dt_at(double t, double base_dt) const {
        if (kind == Kind::constant) return base_dt;
        const double tol = 1e-9 * std::max(1.0, std::abs(t_crit));
        return t < t_crit - tol ? dt_before : dt_after;
    }
};

enum class Integrator { euler, rk4 };

inline Integrator parse_integrator(const std::string& s) {
    if (s == "euler") return Integrator::euler;
    if (s == "rk4") return Integrator::rk4;
    throw Error(ErrorKind::usage, "unknown integrator '" + s + "'");
}

namespace detail {

/// Evaluates the residual field row by row. `row_fn(y, z_row, out_row)` sees
/// the perception row and the residual row of y. Per-row squared norms are
/// stored so reductions happen in a fixed order afterwards.
template <std::floating_point T, class RowFn>
void for_each_residual_row(const CellGrid<T>& g, const RuleWeights<T>& w, const PackedRule<T>& rule,
                           const Discretization& disc, std::size_t threads, std::vector<double>* row_sq,
                           RowFn&& row_fn) {
    const std::size_t H = g.height(), W = g.width(), C = g.channels(), K = rule.input_width();
    if (row_sq) row_sq->assign(H, 0.0);
    parallel_for(H, threads, [&](std::size_t b, std::size_t e) {
        std::vector<T> z(W * K), out(W * C), hidden(rule.hidden());
        for (std::size_t y = b; y < e; ++y) {
            perceive_row(g, w, disc, y, std::span<T>(z));
            for (std::size_t x = 0; x < W; ++x)
                rule.apply(std::span<const T>(z.data() + x * K, K), hidden, std::span<T>(out.data() + x * C, C));
            if (row_sq) {
                double s = 0;
                for (T v : out) s += static_cast<double>(v) * static_cast<double>(v);
                (*row_sq)[y] = s;
            }
            row_fn(y, std::span<const T>(out));
        }
    });
}

inline double rms_from_rows(const std::vector<double>& rows, std::size_t count) {
    double s = 0;
    for (double r : rows) s += r;
    return std::sqrt(s / static_cast<double>(count));
}

}  // namespace detail

/// Residual field f(S) (dS/dt before time-step scaling).
template <std::floating_point T>
CellGrid<T> residual_field(const CellGrid<T>& g, const RuleWeights<T>& w, const Discretization& disc,
                           std::size_t threads = 1) {
    check_perception_inputs(g, w, disc);
    const PackedRule<T> rule(w);
    CellGrid<T> out(g.height(), g.width(), g.channels(), g.time());
    const std::size_t row = g.width() * g.channels();
    detail::for_each_residual_row(g, w, rule, disc, threads, nullptr, [&](std::size_t y, std::span<const T> r) {
        std::copy(r.begin(), r.end(), out.data().begin() + static_cast<std::ptrdiff_t>(y * row));
    });
    return out;
}

struct StepOptions {
    bool mask = false;
    std::int64_t step_index = 0;
    std::uint64_t mask_seed = 0;
    std::size_t threads = 1;
};

/// Incremental integrator over one grid. Owns the state; each advance() is
/// one Euler or RK4 step.
template <std::floating_point T = float>
class Simulator {
public:
    struct Options {
        Integrator integrator = Integrator::euler;
        bool mask = false;
        std::uint64_t mask_seed = 0;
        std::size_t threads = 1;
    };

    Simulator(RuleWeights<T> weights, CellGrid<T> initial, Discretization disc, Options opt)
        : weights_(std::move(weights)), rule_(weights_), state_(std::move(initial)), disc_(std::move(disc)),
          opt_(opt), seg_start_(state_.time()) {
        if (opt_.integrator == Integrator::rk4 && opt_.mask)
            throw Error(ErrorKind::usage, "rk4 integrates the deterministic field; disable the stochastic mask");
        check_perception_inputs(state_, weights_, disc_);
        next_ = state_;
    }

    const CellGrid<T>& state() const noexcept { return state_; }
    const RuleWeights<T>& weights() const noexcept { return weights_; }
    const Discretization& discretization() const noexcept { return disc_; }
    std::int64_t steps() const noexcept { return steps_; }
    double time() const noexcept { return state_.time(); }
    const Options& options() const noexcept { return opt_; }

    void set_discretization(Discretization d) {
        check_perception_inputs(state_, weights_, d);
        disc_ = std::move(d);
    }
    void set_threads(std::size_t n) { opt_.threads = n; }

    /// Replaces the state (time included) and restarts the time bookkeeping.
    void reset(CellGrid<T> s, std::int64_t steps = 0) {
        if (!s.same_shape(state_)) throw Error(ErrorKind::shape, "reset state has a different shape");
        state_ = std::move(s);
        steps_ = steps;
        seg_start_ = state_.time();
        seg_steps_ = 0;
        seg_dt_ = 0;
    }
    CellGrid<T>& mutable_state() noexcept { return state_; }

    /// RMS over cells and channels of f at the current state.
    double field_rms() const {
        std::vector<double> rows;
        const Discretization d = disc_.at_time(state_.time());
        detail::for_each_residual_row(state_, weights_, rule_, d, opt_.threads, &rows,
                                      [](std::size_t, std::span<const T>) {});
        return detail::rms_from_rows(rows, state_.data().size());
    }

    /// Advances by dt. Returns the RMS of f at the pre-step state.
    double advance(double dt) {
        if (!(dt > 0) || !std::isfinite(dt)) throw Error(ErrorKind::validation, "dt must be finite and > 0");
        const Discretization d = disc_.at_time(state_.time());
        const double rms = opt_.integrator == Integrator::euler ? euler(d, dt) : rk4(d, dt);
        if (!next_.all_finite())
            throw NumericError(steps_, "non-finite state at step " + std::to_string(steps_));
        // time as segment start + k * dt so long runs do not accumulate drift
        if (dt != seg_dt_) {
            seg_start_ = state_.time();
            seg_steps_ = 0;
            seg_dt_ = dt;
        }
        ++seg_steps_;
        next_.set_time(seg_start_ + static_cast<double>(seg_steps_) * dt);
        std::swap(state_, next_);
        ++steps_;
        return rms;
    }

private:
    double euler(const Discretization& d, double dt) {
        const std::size_t W = state_.width(), C = state_.channels(), row = W * C;
        std::vector<double> rows;
        const T* src = state_.data().data();
        T* dst = next_.data().data();
        const auto step = static_cast<std::uint64_t>(steps_);
        detail::for_each_residual_row(state_, weights_, rule_, d, opt_.threads, &rows,
                                      [&](std::size_t y, std::span<const T> r) {
                                          for (std::size_t x = 0; x < W; ++x) {
                                              const bool on = !opt_.mask || rng::coin(opt_.mask_seed, x, y, step);
                                              const std::size_t base = y * row + x * C;
                                              for (std::size_t c = 0; c < C; ++c) {
                                                  const double s = static_cast<double>(src[base + c]);
                                                  dst[base + c] =
                                                      on ? static_cast<T>(s + static_cast<double>(r[x * C + c]) * dt)
                                                         : src[base + c];
                                              }
                                          }
                                      });
        return detail::rms_from_rows(rows, state_.data().size());
    }

    double rk4(const Discretization& d, double dt) {
        const std::size_t row = state_.width() * state_.channels();
        const std::size_t n = state_.data().size();
        std::vector<T> k[4];
        for (auto& v : k) v.resize(n);
        CellGrid<T> probe = state_;
        std::vector<double> rows, rows_first;
        const T* s = state_.data().data();
        for (int stage = 0; stage < 4; ++stage) {
            const CellGrid<T>& at = stage == 0 ? state_ : probe;
            T* ks = k[stage].data();
            detail::for_each_residual_row(at, weights_, rule_, d, opt_.threads, &rows,
                                          [&](std::size_t y, std::span<const T> r) {
                                              std::copy(r.begin(), r.end(), ks + y * row);
                                          });
            if (stage == 0) rows_first = rows;
            if (stage < 3) {
                const double h = stage < 2 ? 0.5 * dt : dt;
                T* p = probe.data().data();
                for (std::size_t i = 0; i < n; ++i)
                    p[i] = static_cast<T>(static_cast<double>(s[i]) + h * static_cast<double>(ks[i]));
            }
        }
        T* dst = next_.data().data();
        for (std::size_t i = 0; i < n; ++i) {
            const double sum = static_cast<double>(k[0][i]) + 2.0 * static_cast<double>(k[1][i]) +
                               2.0 * static_cast<double>(k[2][i]) + static_cast<double>(k[3][i]);
            dst[i] = static_cast<T>(static_cast<double>(s[i]) + dt / 6.0 * sum);
        }
        return detail::rms_from_rows(rows_first, n);
    }

    RuleWeights<T> weights_;
    PackedRule<T> rule_;
    CellGrid<T> state_;
    CellGrid<T> next_;
    Discretization disc_;
    Options opt_;
    std::int64_t steps_ = 0;
    double seg_start_ = 0;
    std::int64_t seg_steps_ = 0;
    double seg_dt_ = 0;
};

/// One Euler step S' = S + f(S) * mask * dt.
template <std::floating_point T>
CellGrid<T> step(const CellGrid<T>& grid, const RuleWeights<T>& w, const Discretization& disc, double dt,
                 const StepOptions& opt = {}) {
    typename Simulator<T>::Options so{Integrator::euler, opt.mask, opt.mask_seed, opt.threads};
    Simulator<T> sim(w, grid, disc, so);
    sim.reset(grid, opt.step_index);
    sim.advance(dt);
    return sim.state();
}

/// One reproducible run.
template <std::floating_point T = float>
struct SimSpec {
    RuleWeights<T> weights;
    std::size_t height = 128;
    std::size_t width = 128;
    SeedSpec seed;
    std::optional<CellGrid<T>> initial_state;  // replaces the seed when set
    Discretization disc;
    StepScheduler scheduler;
    Integrator integrator = Integrator::euler;
    double duration = 300.0;
    bool stochastic_mask = false;
    std::uint64_t mask_rng_seed = 0;
    std::size_t threads = 1;
    std::int64_t snapshot_every = 0;  // 0 = keep no intermediate snapshots

    /// Seed mode and mask defaults of the weights' variant: noise seed and
    /// deterministic updates for noise, zero seed and masked updates otherwise.
    static SimSpec for_weights(RuleWeights<T> w, std::size_t h = 128, std::size_t wd = 128) {
        SimSpec s;
        s.height = h;
        s.width = wd;
        if (w.variant == Variant::noise) {
            s.seed.mode = SeedMode::uniform_noise;
            s.stochastic_mask = false;
        } else {
            s.seed.mode = SeedMode::zero;
            s.stochastic_mask = true;
        }
        s.weights = std::move(w);
        return s;
    }

    void check() const {
        validate(weights);
        if (weights.variant == Variant::noise && stochastic_mask)
            throw Error(ErrorKind::validation, "the noise variant updates deterministically; disable the mask");
        if (weights.variant == Variant::noise && !initial_state && seed.mode != SeedMode::uniform_noise)
            throw Error(ErrorKind::validation, "the noise variant needs a uniform-noise seed");
        if (integrator == Integrator::rk4 && stochastic_mask)
            throw Error(ErrorKind::usage, "rk4 cannot be combined with the stochastic mask");
        if (!(duration >= 0) || !std::isfinite(duration))
            throw Error(ErrorKind::validation, "duration must be finite and >= 0");
        if (scheduler.kind == StepScheduler::Kind::piecewise_ab && (!(scheduler.dt_before > 0) || !(scheduler.dt_after > 0)))
            throw Error(ErrorKind::validation, "scheduler time steps must be > 0");
        const std::size_t h = initial_state ? initial_state->height() : height;
        const std::size_t w = initial_state ? initial_state->width() : width;
        disc.check(h, w);
    }

    CellGrid<T> initial() const {
        if (initial_state) {
            if (initial_state->channels() != weights.channels)
                throw Error(ErrorKind::shape, "initial state channels do not match the weights");
            return *initial_state;
        }
        return make_seed<T>(height, width, weights.channels, seed);
    }
};

template <std::floating_point T = float>
struct Trajectory {
    CellGrid<T> final_state;
    std::vector<CellGrid<T>> snapshots;
    std::int64_t steps = 0;
    std::vector<std::pair<double, std::int64_t>> dt_runs;  // (dt, consecutive steps)
};

/// Step count and step sizes a run would use, without simulating.
inline std::vector<std::pair<double, std::int64_t>> plan_steps(const StepScheduler& sched, double base_dt,
                                                               double duration) {
    std::vector<std::pair<double, std::int64_t>> runs;
    const double tol = 1e-9 * std::max(1.0, duration);
    double seg_start = 0, t = 0;
    std::int64_t seg_steps = 0;
    double seg_dt = 0;
    while (t < duration - tol) {
        const double dt = sched.dt_at(t, base_dt);
        if (dt != seg_dt) {
            seg_start = t;
            seg_steps = 0;
            seg_dt = dt;
            runs.emplace_back(dt, 0);
        }
        ++seg_steps;
        ++runs.back().second;
        t = seg_start + static_cast<double>(seg_steps) * dt;
    }
    return runs;
}

/// Integrates from the seed until the first step whose start time reaches
/// the duration. `on_step` (optional) observes the state after every step.
template <std::floating_point T>
Trajectory<T> simulate(const SimSpec<T>& spec,
                       const std::function<void(const CellGrid<T>&, std::int64_t)>& on_step = {}) {
    spec.check();
    Simulator<T> sim(spec.weights, spec.initial(), spec.disc,
                     {spec.integrator, spec.stochastic_mask, spec.mask_rng_seed, spec.threads});
    Trajectory<T> out;
    const double tol = 1e-9 * std::max(1.0, spec.duration);
    while (sim.time() < spec.duration - tol) {
        const double dt = spec.scheduler.dt_at(sim.time(), spec.disc.dt);
        if (out.dt_runs.empty() || out.dt_runs.back().first != dt) out.dt_runs.emplace_back(dt, 0);
        ++out.dt_runs.back().second;
        sim.advance(dt);
        if (spec.snapshot_every > 0 && sim.steps() % spec.snapshot_every == 0) out.snapshots.push_back(sim.state());
        if (on_step) on_step(sim.state(), sim.steps());
    }
    out.steps = sim.steps();
    out.final_state = sim.state();
    return out;
}

}  // namespace nca
