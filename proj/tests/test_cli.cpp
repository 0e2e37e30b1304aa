#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <regex>
#include <sstream>
#include <string>

#include "nca/image_io.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int rc = -1;
    std::string out, err;
};

const fs::path& workdir() {
    static const fs::path dir = [] {
        auto d = fs::temp_directory_path() / ("nca_cli_test_" + std::to_string(::getpid()));
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Run run(const std::string& bin, const std::string& args) {
    const fs::path err = workdir() / "stderr.txt";
    const std::string cmd = "cd '" + workdir().string() + "' && '" + bin + "' " + args + " 2>'" + err.string() + "'";
    Run r;
    FILE* p = ::popen(cmd.c_str(), "r");
    REQUIRE(p);
    char buf[4096];
    for (std::size_t n; (n = std::fread(buf, 1, sizeof buf, p)) > 0;) r.out.append(buf, n);
    const int status = ::pclose(p);
    r.rc = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.err = slurp(err);
    return r;
}

Run cli(const std::string& args) { return run(NCA_BIN, args); }

// Small weight files shared by the cases below.
void make_weights() {
    static bool done = false;
    if (done) return;
    for (const char* args : {"damped -C 3 -D 8 --scale 0.1 --k 0.2 small.ncaw",
                             "damped -C 12 -D 16 --scale 0.1 --k 0.2 full.ncaw", "decay -C 4 --k 0.5 decay.ncaw",
                             "constant -C 3 --c 0.5 const.ncaw"}) {
        const auto r = run(MAKE_WEIGHTS_BIN, args);
        INFO(r.err);
        REQUIRE(r.rc == 0);
    }
    REQUIRE(cli("synth --weights small.ncaw --size 16x16 -T 10 --out target.png").rc == 0);
    done = true;
}

std::vector<std::vector<std::string>> tsv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::istringstream ls(line);
        for (std::string c; std::getline(ls, c, '\t');) cells.push_back(c);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST_CASE("usage errors exit 1 and runtime errors exit 2", "[cli]") {
    make_weights();
    auto r = cli("");
    CHECK(r.rc == 1);
    CHECK_FALSE(r.err.empty());
    r = cli("synth --weights small.ncaw --out x.png --bogus");
    CHECK(r.rc == 1);
    CHECK_FALSE(r.err.empty());
    r = cli("sweep-dx --weights small.ncaw --target target.png --values 1..0:3log");
    CHECK(r.rc == 1);
    CHECK(r.err.find("range") != std::string::npos);
    r = cli("synth --weights small.ncaw --size 7y7 --out x.png");
    CHECK(r.rc == 1);
    r = cli("synth --weights missing.ncaw --out x.png");
    CHECK(r.rc == 2);
    CHECK(r.err.find("missing.ncaw") != std::string::npos);
    r = cli("sweep-dt --weights small.ncaw --target nothere.png --size 8x8 -T 1");
    CHECK(r.rc == 2);
    CHECK(cli("--help").rc == 0);
    CHECK(run(MAKE_WEIGHTS_BIN, "sideways out.ncaw").rc == 1);
}

TEST_CASE("synth at dt 1 for T 300 takes 300 steps and writes one PNG", "[cli]") {
    make_weights();
    fs::create_directories(workdir() / "synth");
    const auto r = cli("synth --weights full.ncaw --dt 1.0 -T 300 --size 128x128 --out synth/out.png");
    INFO(r.err);
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("steps=300 ") != std::string::npos);
    CHECK(std::distance(fs::directory_iterator(workdir() / "synth"), fs::directory_iterator{}) == 1);
    const auto img = nca::io::load_image((workdir() / "synth" / "out.png").string());
    CHECK(img.height == 128);
    CHECK(img.width == 128);
}

TEST_CASE("identical flags give identical bytes", "[cli]") {
    make_weights();
    const std::string base = "synth --weights small.ncaw --size 24x20 -T 15 --rng-seed 5 ";
    REQUIRE(cli(base + "--out a.png --state-out a.ncst").rc == 0);
    REQUIRE(cli(base + "--out b.png --state-out b.ncst").rc == 0);
    REQUIRE(cli(base + "--threads 3 --out c.png --state-out c.ncst").rc == 0);
    CHECK(slurp(workdir() / "a.png") == slurp(workdir() / "b.png"));
    CHECK(slurp(workdir() / "a.ncst") == slurp(workdir() / "b.ncst"));
    CHECK(slurp(workdir() / "a.ncst") == slurp(workdir() / "c.ncst"));

    const std::string sweep = "sweep-dt --weights small.ncaw --target target.png --size 8x8 -T 2 --values 0.25,0.5,1 ";
    const auto s1 = cli(sweep + "--jobs 1");
    const auto s2 = cli(sweep + "--jobs 3");
    REQUIRE(s1.rc == 0);
    CHECK(s1.out == s2.out);
}

TEST_CASE("sweep-dx defaults to 11 cell sizes from 2^-4 to 1", "[cli]") {
    make_weights();
    const auto r = cli("sweep-dx --weights small.ncaw --target target.png --size 8x8 -T 1 --json dx.json");
    INFO(r.err);
    REQUIRE(r.rc == 0);
    const auto rows = tsv_rows(r.out);
    REQUIRE(rows.size() == 12);
    CHECK(rows[0] == std::vector<std::string>{"value", "loss", "ratio"});
    CHECK(std::stod(rows[1][0]) == 0.0625);
    CHECK(std::stod(rows[11][0]) == 1.0);
    CHECK(rows[11][2] == "1");
    for (std::size_t i = 2; i < rows.size(); ++i) CHECK(std::stod(rows[i][0]) > std::stod(rows[i - 1][0]));
    CHECK(r.out.find("grid = ceil(8/dx)") != std::string::npos);
    CHECK(fs::file_size(workdir() / "dx.json") > 0);
}

TEST_CASE("sweep-dt defaults to 10 time steps from 1e-3 to 1", "[cli]") {
    make_weights();
    const auto r = cli("sweep-dt --weights small.ncaw --target target.png --size 8x8 -T 1 --report dt.tsv");
    INFO(r.err);
    REQUIRE(r.rc == 0);
    const auto rows = tsv_rows(slurp(workdir() / "dt.tsv"));
    REQUIRE(rows.size() == 11);
    CHECK(std::stod(rows[1][0]) == Catch::Approx(1e-3).epsilon(1e-12));
    CHECK(std::stod(rows[10][0]) == 1.0);
    CHECK(rows[10][2] == "1");
}

TEST_CASE("multiscale default profile spans a cell-size ratio near 11.3", "[cli]") {
    make_weights();
    const auto r = cli("multiscale --weights small.ncaw --steps 1 --out ms.png");
    INFO(r.err);
    REQUIRE(r.rc == 0);
    std::smatch m;
    REQUIRE(std::regex_search(r.out, m, std::regex("scale_ratio=([0-9.eE+-]+)")));
    CHECK(std::stod(m[1]) == Catch::Approx(std::exp2(3.5)).epsilon(2e-3));
    CHECK(r.out.find("dt=0.015625") != std::string::npos);
    CHECK(r.out.find("size=256x1536") != std::string::npos);
}

TEST_CASE("remaining subcommands run end to end", "[cli]") {
    make_weights();
    auto r = cli("schedule --weights small.ncaw --size 12x12 -T 6 --policy A --t-crit 3 --out sched.png");
    INFO(r.err);
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("runs=3x1 + 30x0.1") != std::string::npos);

    r = cli("fixed-point --weights decay.ncaw --init 1,-2,0.5,3");
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("converged\ttrue") != std::string::npos);

    r = cli("mle --weights const.ncaw --size 8x8 -T 5 --dt 0.1");
    REQUIRE(r.rc == 0);
    CHECK(std::stod(r.out) == Catch::Approx(std::log(0.5)).margin(1e-9));
    r = cli("mle --weights const.ncaw --size 8x8 -T 2");
    REQUIRE(r.rc == 0);
    CHECK(tsv_rows(r.out).size() == 5);

    r = cli("aniso --weights small.ncaw --size 12x12 --dx 1 --dy 0.5 --steps 2 --out an.png");
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("dt=0.25") != std::string::npos);

    r = cli("grow --weights small.ncaw --size 12x12 --scale-keyframes 0:1,1:0.5 --steps 4 --frame-every 2 --out frames");
    REQUIRE(r.rc == 0);
    std::size_t frames = 0;
    for (const auto& e : fs::directory_iterator(workdir() / "frames")) frames += e.path().extension() == ".png";
    CHECK(frames >= 2);
}
