#pragma once

// Maximal Lyapunov exponent estimate from the update field:
//   lambda = 1/N * sum_t log |f(S_t)|
// over the N states S_0 .. S_n of a run, where |.| is the RMS over all cells
// and channels of the residual field before time-step scaling.
//
// Note: this substitutes the update field for the derivative f'(x) of the
// textbook discrete estimator; it is not a Jacobian-based exponent.

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "nca/dynamics.hpp"

namespace nca {

struct MleResult {
    double lambda = 0;
    std::int64_t samples = 0;  // states visited, steps + 1
    bool degenerate = false;   // some state had a zero field
    std::vector<double> field_rms;
};

/// Runs spec (mask off) for duration T with constant dt and averages the
/// log field norms. Zero fields contribute log(DBL_MIN).
template <std::floating_point T>
MleResult estimate_mle(SimSpec<T> spec, double duration, double dt) {
    if (spec.stochastic_mask) throw Error(ErrorKind::usage, "the Lyapunov estimate needs deterministic updates");
    spec.duration = duration;
    spec.disc.dt = dt;
    spec.scheduler = StepScheduler::constant();
    spec.check();
    Simulator<T> sim(spec.weights, spec.initial(), spec.disc, {spec.integrator, false, 0, spec.threads});
    MleResult r;
    const double tol = 1e-9 * std::max(1.0, duration);
    while (sim.time() < duration - tol) r.field_rms.push_back(sim.advance(dt));
    r.field_rms.push_back(sim.field_rms());
    const double floor = std::log(std::numeric_limits<double>::min());
    double sum = 0;
    for (double v : r.field_rms) {
        if (v > 0) {
            sum += std::log(v);
        } else {
            sum += floor;
            r.degenerate = true;
        }
    }
    r.samples = static_cast<std::int64_t>(r.field_rms.size());
    r.lambda = sum / static_cast<double>(r.samples);
    return r;
}

}  // namespace nca
