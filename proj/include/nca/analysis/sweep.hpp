#pragma once

// Discretization sweeps: run the same seeded simulation at several time steps
// or cell sizes and report the quality ratio L(reference) / L(value) of the
// appearance proxy against a target image.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "nca/analysis/resize.hpp"
#include "nca/analysis/texture_distance.hpp"
#include "nca/dynamics.hpp"
#include "nca/parallel.hpp"

namespace nca {

enum class SweepAxis { dt, dx };

struct SweepRow {
    double value = 0;
    double loss = 0;
    double ratio = 0;
    std::size_t grid = 0;  // square grid side
    double dt = 0;
    std::int64_t steps = 0;
};

struct SweepReport {
    SweepAxis axis = SweepAxis::dt;
    std::vector<SweepRow> rows;  // ascending value
    double reference_loss = 0;   // loss of the run at 1.0
    double duration = 0;
    std::uint64_t seed = 0;
    std::uint64_t mask_seed = 0;
    std::string variant;
    std::size_t base_size = 128;
};

struct SweepOptions {
    double duration = 300.0;
    std::size_t base_size = 128;
    std::size_t jobs = 0;  // 0 = hardware concurrency
};

/// Grid side ceil(base / dx) and time step min(1, dx^2) of a cell-size sweep point.
struct DxPlan {
    std::size_t grid;
    double dt;
};

inline DxPlan dx_plan(double dx, std::size_t base = 128) {
    const double cells = static_cast<double>(base) / dx;
    const auto grid = static_cast<std::size_t>(std::ceil(cells - 1e-9 * cells));
    return {grid, std::min(1.0, dx * dx)};
}

namespace detail {

template <class Job>
void run_jobs(std::size_t n, std::size_t jobs, Job&& job) {
    jobs = std::min(resolve_threads(jobs), n);
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    auto worker = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                job(i);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < jobs; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline double quality_ratio(double ref, double loss) {
    if (ref == loss) return 1.0;
    return ref / loss;
}

inline SweepReport run_sweep(SweepAxis axis, const SimSpec<float>& base, const Image& target,
                             std::vector<double> values, const SweepOptions& opt) {
    for (double v : values)
        if (!(v > 0) || !(v <= 1.0) || !std::isfinite(v))
            throw Error(ErrorKind::usage, "sweep values must lie in (0, 1]");
    std::sort(values.begin(), values.end());
    std::vector<double> points = values;
    const bool has_ref = std::find(values.begin(), values.end(), 1.0) != values.end();
    if (!has_ref) points.push_back(1.0);

    Image tgt = target;
    if (tgt.height != opt.base_size || tgt.width != opt.base_size)
        tgt = resize_bilinear(target, opt.base_size, opt.base_size);
    static const TextureMetric metric;
    const auto target_emb = metric.embedding(tgt);

    std::vector<SweepRow> rows(points.size());
    const std::size_t jobs = std::min(resolve_threads(opt.jobs), points.size());
    run_jobs(points.size(), jobs, [&](std::size_t i) {
        SimSpec<float> spec = base;
        spec.duration = opt.duration;
        spec.scheduler = StepScheduler::constant();
        spec.threads = jobs > 1 ? 1 : base.threads;
        SweepRow row;
        row.value = points[i];
        if (axis == SweepAxis::dt) {
            spec.disc.dt = points[i];
            spec.height = spec.width = opt.base_size;
            row.grid = opt.base_size;
        } else {
            const DxPlan plan = dx_plan(points[i], opt.base_size);
            spec.height = spec.width = plan.grid;
            spec.disc.dt = plan.dt;
            spec.disc.dx = CellSize(points[i]);
            spec.disc.dy = CellSize(points[i]);
            row.grid = plan.grid;
        }
        row.dt = spec.disc.dt;
        const auto traj = simulate(spec);
        row.steps = traj.steps;
        Image img = rgb_of(traj.final_state);
        if (img.height != opt.base_size || img.width != opt.base_size)
            img = resize_bilinear(img, opt.base_size, opt.base_size);
        row.loss = TextureMetric::distance(metric.embedding(img), target_emb);
        rows[i] = row;
    });

    SweepReport rep;
    rep.axis = axis;
    rep.duration = opt.duration;
    rep.seed = base.seed.rng_seed;
    rep.mask_seed = base.mask_rng_seed;
    rep.variant = to_string(base.weights.variant);
    rep.base_size = opt.base_size;
    const std::size_t ref_index = has_ref ? static_cast<std::size_t>(
                                                std::find(points.begin(), points.end(), 1.0) - points.begin())
                                          : points.size() - 1;
    rep.reference_loss = rows[ref_index].loss;
    for (std::size_t i = 0; i < values.size(); ++i) {
        rows[i].ratio = quality_ratio(rep.reference_loss, rows[i].loss);
        rep.rows.push_back(rows[i]);
    }
    return rep;
}

}  // namespace detail

/// Time-step sweep on a base_size^2 grid with shared seeds.
inline SweepReport sweep_dt(const SimSpec<float>& base, const Image& target, std::vector<double> values,
                            const SweepOptions& opt = {}) {
    return detail::run_sweep(SweepAxis::dt, base, target, std::move(values), opt);
}

/// Cell-size sweep: grid ceil(base/dx)^2, dt = min(1, dx^2), output resized
/// bilinearly to base_size^2 before scoring.
inline SweepReport sweep_dx(const SimSpec<float>& base, const Image& target, std::vector<double> values,
                            const SweepOptions& opt = {}) {
    return detail::run_sweep(SweepAxis::dx, base, target, std::move(values), opt);
}

/// Tab-separated rows "value loss ratio" after '#' metadata lines.
inline void write_tsv(const SweepReport& r, std::ostream& out) {
    out << "# axis=" << (r.axis == SweepAxis::dt ? "dt" : "dx") << " T=" << r.duration << " variant=" << r.variant
        << " seed=" << r.seed << " mask_seed=" << r.mask_seed << " reference_loss=" << r.reference_loss << "\n";
    if (r.axis == SweepAxis::dx) out << "# dt = min(1, dx^2); grid = ceil(" << r.base_size << "/dx) per side\n";
    out << "value\tloss\tratio\n";
    out.precision(17);
    for (const auto& row : r.rows) out << row.value << '\t' << row.loss << '\t' << row.ratio << '\n';
}

inline nlohmann::json to_json(const SweepReport& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"value", row.value},
                        {"loss", row.loss},
                        {"ratio", row.ratio},
                        {"grid", row.grid},
                        {"dt", row.dt},
                        {"steps", row.steps}});
    return {{"axis", r.axis == SweepAxis::dt ? "dt" : "dx"},
            {"duration", r.duration},
            {"variant", r.variant},
            {"base_size", r.base_size},
            {"seed", r.seed},
            {"mask_seed", r.mask_seed},
            {"reference_loss", r.reference_loss},
            {"rows", rows}};
}

}  // namespace nca
