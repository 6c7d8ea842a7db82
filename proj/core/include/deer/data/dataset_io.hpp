#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "deer/data/samples.hpp"

namespace deer::data {

/// On-disk pretraining dataset: trajectories plus the sample index.
struct Dataset {
    static constexpr std::uint32_t kVersion = 1;

    nlohmann::json meta = nlohmann::json::object();  // env spec, composition, config hash
    int max_delay = 1;
    std::set<int> delay_set;
    TrajectoryStore store;
    std::vector<SampleRef> samples;

    std::string to_bytes() const;
    static Dataset from_bytes(const std::string& bytes);
    void save(const std::filesystem::path& path) const;
    static Dataset load(const std::filesystem::path& path);
};

}  // namespace deer::data
