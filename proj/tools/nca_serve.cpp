// nca-serve: websocket steering server.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "nca/service/server.hpp"

namespace {
volatile std::sig_atomic_t stop_requested = 0;
void on_signal(int) { stop_requested = 1; }
}  // namespace

int main(int argc, char** argv) {
    using namespace nca::service;
    CLI::App app{"Serve steering sessions over websocket (/session) and weight files over HTTP (/weights)"};
    ServerOptions opt;
    std::string weights_dir = "weights";
    std::size_t sim_threads = 1;
    app.add_option("--address", opt.address, "listen address")->capture_default_str();
    app.add_option("--port", opt.port, "listen port (0: any free port)")->capture_default_str();
    app.add_option("--weights-dir", weights_dir, "directory of *.ncaw files; uploads are stored here")
        ->capture_default_str();
    app.add_option("--token", opt.token, "require this static token");
    app.add_option("--sim-threads", sim_threads, "simulation threads per session")->capture_default_str();
    app.add_option("--max-fps", opt.session.max_fps, "frame rate cap per session")->capture_default_str();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }
    opt.session.threads = sim_threads;

    try {
        auto registry = std::make_shared<WeightsRegistry>(weights_dir);
        Server server(opt, registry);
        server.start();
        std::cout << "listening on " << opt.address << ":" << server.port() << " with "
                  << registry->list().size() << " weight file(s)" << std::endl;
        std::signal(SIGINT, on_signal);
        std::signal(SIGTERM, on_signal);
        while (!stop_requested) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        server.stop();
    } catch (const std::exception& e) {
        std::cerr << "nca-serve: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
