#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "deer/nn/tensor.hpp"

namespace deer::nn {

/// Named weight blocks plus free-form metadata. The binary form stores the
/// raw IEEE-754 doubles and round-trips bit-exactly; the JSON form is for
/// inspection.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    nlohmann::json meta = nlohmann::json::object();
    std::vector<std::pair<std::string, std::vector<double>>> tensors;

    void add(const ParamList& params);
    /// Copies stored tensors into `params` by name; sizes must match.
    void restore(const ParamList& params) const;
    const std::vector<double>& tensor(const std::string& name) const;

    std::string to_bytes() const;
    static Checkpoint from_bytes(const std::string& bytes);

    nlohmann::json to_json() const;
    static Checkpoint from_json(const nlohmann::json& j);

    void save(const std::filesystem::path& path) const;
    static Checkpoint load(const std::filesystem::path& path);
};

}  // namespace deer::nn
