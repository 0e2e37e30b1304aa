// nca: command-line driver for synthesis, sweeps, schedules and analyses.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "nca/analysis/fixed_point.hpp"
#include "nca/analysis/lyapunov.hpp"
#include "nca/analysis/range.hpp"
#include "nca/analysis/sweep.hpp"
#include "nca/dynamics.hpp"
#include "nca/image_io.hpp"
#include "nca/io.hpp"
#include "nca/scale.hpp"

namespace {

using namespace nca;

constexpr int exit_usage = 1;
constexpr int exit_runtime = 2;

struct Size {
    std::size_t h = 128, w = 128;
};

Size parse_size(const std::string& s) {
    const auto x = s.find('x');
    try {
        if (x == std::string::npos) throw 0;
        std::size_t p1 = 0, p2 = 0;
        const auto h = std::stoul(s.substr(0, x), &p1);
        const auto w = std::stoul(s.substr(x + 1), &p2);
        if (p1 != x || p2 != s.size() - x - 1) throw 0;
        return {h, w};
    } catch (...) {
        throw Error(ErrorKind::usage, "size must look like HxW, got '" + s + "'");
    }
}

// Flags shared by every simulating subcommand.
struct RunFlags {
    std::string weights;
    std::string variant;
    std::string size = "128x128";
    double duration = 300;
    std::int64_t steps = -1;
    double dt = 1.0;
    std::string dx = "1", dy = "1";
    std::string seed_mode;
    double eps = 0.25;
    std::uint64_t rng_seed = 0;
    std::uint64_t mask_seed = 0;
    std::string mask;
    std::string integrator = "euler";
    std::string init_state;
    std::size_t threads = 0;

    void add_to(CLI::App* app, bool with_dt = true, bool with_dx = true) {
        app->add_option("--weights", weights, "NCAW weight file")->required();
        app->add_option("--variant", variant, "run the weights as vanilla|pe|noise (default: as stored)");
        app->add_option("--size", size, "grid size HxW")->capture_default_str();
        app->add_option("-T,--duration", duration, "simulated time")->capture_default_str();
        if (with_dt) {
            app->add_option("--steps", steps, "number of steps (overrides -T as steps * dt)");
            app->add_option("--dt", dt, "time step")->capture_default_str();
        }
        if (with_dx) {
            app->add_option("--dx", dx, "cell width")->capture_default_str();
            app->add_option("--dy", dy, "cell height")->capture_default_str();
        }
        app->add_option("--seed-mode", seed_mode, "zero|noise (default: by variant)");
        app->add_option("--eps", eps, "half-width of the uniform noise seed")->capture_default_str();
        app->add_option("--rng-seed", rng_seed, "seed for the initial state")->capture_default_str();
        app->add_option("--mask-seed", mask_seed, "seed for the stochastic update mask")->capture_default_str();
        app->add_option("--mask", mask, "on|off (default: off for noise, on otherwise)");
        app->add_option("--integrator", integrator, "euler|rk4")->capture_default_str();
        app->add_option("--init-state", init_state, "start from an NCST snapshot");
        app->add_option("--threads", threads, "worker threads per simulation (0: all cores)")->capture_default_str();
    }

    SimSpec<float> spec() const {
        Weights w = io::load_weights(weights);
        if (!variant.empty()) {
            w.variant = parse_variant(variant);
            w.padding = default_padding(w.variant);
            validate(w);
        }
        const Size sz = parse_size(size);
        auto spec = SimSpec<float>::for_weights(std::move(w), sz.h, sz.w);
        if (seed_mode == "zero")
            spec.seed.mode = SeedMode::zero;
        else if (seed_mode == "noise")
            spec.seed.mode = SeedMode::uniform_noise;
        else if (!seed_mode.empty())
            throw Error(ErrorKind::usage, "--seed-mode must be zero or noise");
        if (mask == "on")
            spec.stochastic_mask = true;
        else if (mask == "off")
            spec.stochastic_mask = false;
        else if (!mask.empty())
            throw Error(ErrorKind::usage, "--mask must be on or off");
        spec.seed.epsilon = eps;
        spec.seed.rng_seed = rng_seed;
        spec.mask_rng_seed = mask_seed;
        spec.integrator = parse_integrator(integrator);
        spec.threads = threads;
        spec.disc.dt = dt;
        spec.disc.dx = CellSize(parse_number(dx));
        spec.disc.dy = CellSize(parse_number(dy));
        spec.duration = steps >= 0 ? static_cast<double>(steps) * dt : duration;
        if (!init_state.empty()) {
            Grid g = io::load_state(init_state);
            io::check_state_for(g, spec.weights);
            spec.height = g.height();
            spec.width = g.width();
            g.set_time(0.0);
            spec.initial_state = std::move(g);
        }
        return spec;
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << text;
}

std::string with_suffix(const std::string& path, std::int64_t step) {
    std::filesystem::path p(path);
    char buf[32];
    std::snprintf(buf, sizeof buf, "_%06lld", static_cast<long long>(step));
    return (p.parent_path() / (p.stem().string() + buf + p.extension().string())).string();
}

void report_run(const Trajectory<float>& traj, const std::string& out) {
    std::cout << "steps=" << traj.steps << " t=" << traj.final_state.time() << " size=" << traj.final_state.height()
              << "x" << traj.final_state.width() << " out=" << out << "\n";
}

Trajectory<float> run_and_save(SimSpec<float> spec, const std::string& out, const std::string& state_out) {
    auto traj = simulate(spec);
    io::save_image(rgb_of(traj.final_state), out);
    if (!state_out.empty()) io::save_state(traj.final_state, state_out);
    if (spec.snapshot_every > 0)
        for (const auto& g : traj.snapshots) {
            const auto step = static_cast<std::int64_t>(std::llround(g.time() / spec.disc.dt));
            io::save_image(rgb_of(g), with_suffix(out, step));
        }
    return traj;
}

std::string format_dt_runs(const std::vector<std::pair<double, std::int64_t>>& runs) {
    std::ostringstream s;
    for (std::size_t i = 0; i < runs.size(); ++i)
        s << (i ? " + " : "") << runs[i].second << "x" << runs[i].first;
    return s.str();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Neural cellular automata as discretized PDEs: synthesis and analysis"};
    app.require_subcommand(1);
    app.footer(
        "Ranges (--values): A..B:Nlog (N log-spaced), A..B:Nlin, or a comma list. Numbers may be written 2^e.\n"
        "Profiles (--dx-profile): exp:A..B:symmetric (A at the side borders, B at the center column),\n"
        "exp:A..B:ramp (A left to B right) or const:V.\n"
        "Exit codes: 0 ok, 1 usage error, 2 runtime error.");

    RunFlags synth_f, sdt_f, sdx_f, sched_f, mle_f, ms_f, an_f, grow_f;
    std::string fp_weights;
    mle_f.duration = 50;
    ms_f.size = "256x1536";
    std::string out, state_out, target, report, json_report, policy = "A", init_csv, profile,
                                                                       dy_profile, keyframes;
    std::int64_t snapshot_every = 0, frame_every = 50;
    double t_crit = 0, tol = 1e-6;
    std::size_t jobs = 0, max_iters = 10000;
    std::string mle_dt = "1e-3,1e-2,1e-1,1";

    auto* synth = app.add_subcommand("synth", "simulate one texture and write a PNG");
    synth_f.add_to(synth);
    synth->add_option("--out", out, "output PNG")->required();
    synth->add_option("--state-out", state_out, "also write the final NCST snapshot");
    synth->add_option("--snapshot-every", snapshot_every, "write an extra PNG every k steps");

    std::string values_dt = "1e-3..1e0:10log", values_dx = "2^-4..2^0:11log";
    auto add_sweep = [&](const char* name, const char* help, RunFlags& f, std::string& vals) {
        auto* sub = app.add_subcommand(name, help);
        f.add_to(sub, false, false);
        sub->add_option("--target", target, "target texture PNG")->required();
        sub->add_option("--values", vals, "sample values")->capture_default_str();
        sub->add_option("--report", report, "TSV report (default: stdout)");
        sub->add_option("--json", json_report, "also write the report as JSON");
        sub->add_option("--jobs", jobs, "concurrent sweep points (0: all cores)")->capture_default_str();
        return sub;
    };
    auto* sweep_dt_cmd = add_sweep("sweep-dt", "time-step generalization sweep", sdt_f, values_dt);
    auto* sweep_dx_cmd = add_sweep("sweep-dx", "cell-size generalization sweep", sdx_f, values_dx);

    auto* schedule = app.add_subcommand("schedule", "switch the time step at t_crit");
    sched_f.add_to(schedule, false);
    schedule->add_option("--policy", policy, "A: dt 1 then 0.1; B: dt 0.1 then 1")->capture_default_str();
    schedule->add_option("--t-crit", t_crit, "switch time")->required();
    schedule->add_option("--out", out, "output PNG")->required();

    auto* fixed = app.add_subcommand("fixed-point", "find a uniform quiescent state");
    fixed->add_option("--weights", fp_weights, "NCAW weight file")->required();
    fixed->add_option("--init", init_csv, "comma-separated initial state (default: zeros)");
    fixed->add_option("--tol", tol, "objective tolerance")->capture_default_str();
    fixed->add_option("--max-iters", max_iters, "iteration limit")->capture_default_str();
    fixed->add_option("--out", out, "result text (default: stdout)");

    auto* mle = app.add_subcommand("mle", "maximal Lyapunov exponent estimate");
    mle_f.add_to(mle, false);
    mle->add_option("--dt", mle_dt, "time step(s), range syntax")->capture_default_str();

    auto* multiscale = app.add_subcommand("multiscale", "spatially varying cell size");
    ms_f.add_to(multiscale, true, false);
    multiscale->get_option("--dt")->default_str("min(1, min dx^2)");
    profile = "exp:2^-3..2^0.5:symmetric";
    multiscale->add_option("--dx-profile", profile, "cell-size profile along x")->capture_default_str();
    multiscale->add_option("--dy-profile", dy_profile, "separate profile for dy (default: same as dx)");
    multiscale->add_option("--out", out, "output PNG")->required();

    auto* aniso = app.add_subcommand("aniso", "different cell width and height");
    an_f.add_to(aniso);
    aniso->get_option("--dt")->default_str("min(1, min(dx, dy)^2)");
    aniso->add_option("--out", out, "output PNG")->required();

    auto* grow = app.add_subcommand("grow", "scale changing over time");
    grow_f.add_to(grow);
    grow->get_option("--dt")->default_str("min(1, (smallest cell)^2)");
    grow->add_option("--scale-keyframes", keyframes, "t0:m0,t1:m1,... cell-size multipliers")->required();
    grow->add_option("--frame-every", frame_every, "steps between frames")->capture_default_str();
    grow->add_option("--out", out, "output directory for frame_XXXXXX.png")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : exit_usage;
    }

    // dt follows the smallest cell unless given explicitly; --steps then counts steps of that dt
    auto cell_dt = [](CLI::App* sub, const RunFlags& f, SimSpec<float>& spec, double smallest) {
        if (sub->count("--dt") > 0) return;
        spec.disc.dt = std::min(1.0, smallest * smallest);
        spec.duration = f.steps >= 0 ? static_cast<double>(f.steps) * spec.disc.dt : f.duration;
    };

    try {
        if (synth->parsed()) {
            auto spec = synth_f.spec();
            spec.snapshot_every = snapshot_every;
            const auto traj = run_and_save(spec, out, state_out);
            report_run(traj, out);
        } else if (sweep_dt_cmd->parsed() || sweep_dx_cmd->parsed()) {
            const bool dt_axis = sweep_dt_cmd->parsed();
            const RunFlags& run = dt_axis ? sdt_f : sdx_f;
            auto spec = run.spec();
            SweepOptions opt;
            opt.duration = spec.duration;
            opt.base_size = parse_size(run.size).h;
            if (parse_size(run.size).w != opt.base_size) throw Error(ErrorKind::usage, "sweeps need a square --size");
            opt.jobs = jobs;
            const Image tgt = io::load_image(target);
            const auto vals = parse_range(dt_axis ? values_dt : values_dx);
            const auto rep = dt_axis ? sweep_dt(spec, tgt, vals, opt) : sweep_dx(spec, tgt, vals, opt);
            std::ostringstream tsv;
            write_tsv(rep, tsv);
            write_text(report, tsv.str());
            if (!json_report.empty()) write_text(json_report, to_json(rep).dump(2) + "\n");
        } else if (schedule->parsed()) {
            auto spec = sched_f.spec();
            if (policy == "A" || policy == "a")
                spec.scheduler = StepScheduler::policy_a(t_crit);
            else if (policy == "B" || policy == "b")
                spec.scheduler = StepScheduler::policy_b(t_crit);
            else
                throw Error(ErrorKind::usage, "--policy must be A or B");
            const auto traj = run_and_save(spec, out, "");
            std::cout << "policy=" << policy << " t_crit=" << t_crit << " runs=" << format_dt_runs(traj.dt_runs)
                      << "\n";
            report_run(traj, out);
        } else if (fixed->parsed()) {
            const Weights w = io::load_weights(fp_weights);
            std::vector<double> init(w.channels, 0.0);
            if (!init_csv.empty()) {
                init.clear();
                std::stringstream ss(init_csv);
                for (std::string item; std::getline(ss, item, ',');) init.push_back(parse_number(item));
            }
            FixedPointOptions opt;
            opt.tol = tol;
            opt.max_iters = max_iters;
            const auto r = find_fixed_point(w, init, opt);
            std::ostringstream s;
            s.precision(17);
            s << "objective\t" << r.objective << "\nconverged\t" << (r.converged ? "true" : "false")
              << "\niterations\t" << r.iterations << "\nstate";
            for (std::size_t i = 0; i < r.state.size(); ++i) s << (i ? "," : "\t") << r.state[i];
            s << "\n";
            write_text(out, s.str());
        } else if (mle->parsed()) {
            auto spec = mle_f.spec();
            if (mle_f.mask.empty()) spec.stochastic_mask = false;
            const auto dts = parse_range(mle_dt);
            std::cout.precision(17);
            if (dts.size() == 1) {
                std::cout << estimate_mle(spec, spec.duration, dts[0]).lambda << "\n";
            } else {
                std::cout << "dt\tlambda\n";
                for (double dt : dts) std::cout << dt << '\t' << estimate_mle(spec, spec.duration, dt).lambda << "\n";
            }
        } else if (multiscale->parsed()) {
            auto spec = ms_f.spec();
            const Size sz{spec.height, spec.width};
            spec.disc.dx = parse_profile(profile, sz.h, sz.w);
            spec.disc.dy = dy_profile.empty() ? spec.disc.dx : parse_profile(dy_profile, sz.h, sz.w);
            cell_dt(multiscale, ms_f, spec, std::min(spec.disc.dx.min(), spec.disc.dy.min()));
            const double border = spec.disc.dx.at(0, 0), center = spec.disc.dx.at(0, sz.w / 2);
            std::cout << "dx border=" << border << " center=" << center
                      << " scale_ratio=" << std::max(border, center) / std::min(border, center)
                      << " dt=" << spec.disc.dt << "\n";
            const auto traj = run_and_save(spec, out, "");
            report_run(traj, out);
        } else if (aniso->parsed()) {
            auto spec = an_f.spec();
            cell_dt(aniso, an_f, spec, std::min(spec.disc.dx.min(), spec.disc.dy.min()));
            std::cout << "dx=" << spec.disc.dx.min() << " dy=" << spec.disc.dy.min() << " dt=" << spec.disc.dt << "\n";
            const auto traj = run_and_save(spec, out, "");
            report_run(traj, out);
        } else if (grow->parsed()) {
            auto spec = grow_f.spec();
            spec.disc.time_scale = parse_keyframes(keyframes);
            double m = 1e300;
            for (const auto& [t, v] : spec.disc.time_scale.keys()) m = std::min(m, v);
            cell_dt(grow, grow_f, spec, m * std::min(spec.disc.dx.min(), spec.disc.dy.min()));
            if (frame_every < 1) throw Error(ErrorKind::usage, "--frame-every must be >= 1");
            std::filesystem::create_directories(out);
            std::int64_t frames = 0;
            auto save = [&](const Grid& g, std::int64_t step) {
                char name[32];
                std::snprintf(name, sizeof name, "frame_%06lld.png", static_cast<long long>(step));
                io::save_image(rgb_of(g), (std::filesystem::path(out) / name).string());
                ++frames;
            };
            save(spec.initial(), 0);
            const auto traj = simulate<float>(spec, [&](const Grid& g, std::int64_t step) {
                if (step % frame_every == 0) save(g, step);
            });
            if (traj.steps % frame_every != 0) save(traj.final_state, traj.steps);
            std::cout << "steps=" << traj.steps << " frames=" << frames << " dt=" << spec.disc.dt << " out=" << out
                      << "\n";
        }
    } catch (const Error& e) {
        std::cerr << "nca: " << e.what() << "\n";
        return e.kind() == ErrorKind::usage ? exit_usage : exit_runtime;
    } catch (const std::exception& e) {
        std::cerr << "nca: " << e.what() << "\n";
        return exit_runtime;
    }
    return 0;
}
