// Writes hand-built NCAW rule files for trying out the CLI and the server
// without a trained model.

#include <CLI11.hpp>

#include <iostream>

#include "nca/constructions.hpp"
#include "nca/io.hpp"

int main(int argc, char** argv) {
    using namespace nca;
    CLI::App app{"write a constructed NCAW weight file"};
    std::string kind = "random", out, variant = "noise";
    std::size_t channels = 12, hidden = 96;
    std::uint64_t seed = 0;
    double scale = 0.1, alpha = 0.2, k = 0.5, c = 0.1;
    app.add_option("kind", kind, "random|damped|heat|decay|constant|zero")->capture_default_str();
    app.add_option("out", out, "output .ncaw")->required();
    app.add_option("-C,--channels", channels)->capture_default_str();
    app.add_option("-D,--hidden", hidden, "hidden width (random, damped, zero)")->capture_default_str();
    app.add_option("--variant", variant, "vanilla|pe|noise (random, zero)")->capture_default_str();
    app.add_option("--seed", seed)->capture_default_str();
    app.add_option("--scale", scale, "entry range of random weights")->capture_default_str();
    app.add_option("--alpha", alpha, "diffusivity of heat")->capture_default_str();
    app.add_option("--k", k, "decay rate (decay, damped)")->capture_default_str();
    app.add_option("--c", c, "value of constant")->capture_default_str();
    CLI11_PARSE(app, argc, argv);

    try {
        Weights w;
        if (kind == "random")
            w = constructions::random<float>(channels, hidden, parse_variant(variant), seed, scale);
        else if (kind == "damped")
            w = constructions::damped_random<float>(channels, hidden, seed, scale, static_cast<float>(k));
        else if (kind == "heat")
            w = constructions::heat<float>(channels, static_cast<float>(alpha));
        else if (kind == "decay")
            w = constructions::decay<float>(channels, static_cast<float>(k));
        else if (kind == "constant")
            w = constructions::constant<float>(channels, static_cast<float>(c));
        else if (kind == "zero")
            w = Weights::zeros(channels, hidden, parse_variant(variant));
        else
            throw Error(ErrorKind::usage, "unknown kind '" + kind + "'");
        io::save_weights(w, out);
        std::cout << out << ": C=" << w.channels << " D=" << w.hidden << " variant=" << to_string(w.variant) << "\n";
    } catch (const Error& e) {
        std::cerr << "make_weights: " << e.what() << "\n";
        return e.kind() == ErrorKind::usage ? 1 : 2;
    }
    return 0;
}
