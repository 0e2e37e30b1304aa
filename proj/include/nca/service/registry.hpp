#pragma once

// Named weight files available to sessions. Backed by a directory of
// *.ncaw files (optional) plus uploads held in memory.

#include <cctype>
#include <filesystem>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "nca/io.hpp"

namespace nca::service {

class WeightsRegistry {
public:
    WeightsRegistry() = default;
    explicit WeightsRegistry(std::filesystem::path dir) : dir_(std::move(dir)) { rescan(); }

    /// Loads every readable *.ncaw of the directory; broken files are skipped.
    void rescan() {
        if (dir_.empty() || !std::filesystem::is_directory(dir_)) return;
        std::lock_guard lk(mu_);
        for (const auto& e : std::filesystem::directory_iterator(dir_)) {
            if (e.path().extension() != ".ncaw") continue;
            try {
                entries_[e.path().stem().string()] = io::load_weights(e.path().string());
            } catch (const Error&) {
            }
        }
    }

    static bool valid_id(const std::string& id) {
        if (id.empty() || id.size() > 64) return false;
        for (char c : id)
            if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
        return id.front() != '.';
    }

    /// Validates NCAW bytes and registers them; persisted when a directory is set.
    Weights add(const std::string& id, const std::vector<std::uint8_t>& bytes) {
        if (!valid_id(id)) throw Error(ErrorKind::usage, "weights id must be 1-64 of [A-Za-z0-9._-]");
        Weights w = io::decode_weights(bytes);
        std::lock_guard lk(mu_);
        if (!dir_.empty()) {
            std::filesystem::create_directories(dir_);
            io::detail::write_file((dir_ / (id + ".ncaw")).string(), bytes);
        }
        entries_[id] = w;
        return w;
    }

    void add(const std::string& id, Weights w) {
        validate(w);
        std::lock_guard lk(mu_);
        entries_[id] = std::move(w);
    }

    std::optional<Weights> get(const std::string& id) const {
        std::lock_guard lk(mu_);
        auto it = entries_.find(id);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

    nlohmann::json list() const {
        std::lock_guard lk(mu_);
        nlohmann::json out = nlohmann::json::array();
        for (const auto& [id, w] : entries_)
            out.push_back({{"id", id}, {"channels", w.channels}, {"hidden", w.hidden}, {"variant", to_string(w.variant)}});
        return out;
    }

private:
    std::filesystem::path dir_;
    mutable std::mutex mu_;
    std::map<std::string, Weights> entries_;
};

}  // namespace nca::service
