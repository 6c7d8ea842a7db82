#pragma once

#include <memory>
#include <string>

#include <nlohmann/json.hpp>

#include "deer/envs/environment.hpp"

namespace deer::envs {

/// Builds an environment from {"name": ..., <parameter overrides>}.
/// Known names: linear_system, point_mass, pendulum.
std::unique_ptr<Environment> make_environment(const nlohmann::json& config);

/// Every tunable parameter of `name` with its default value.
nlohmann::json default_env_config(const std::string& name);

}  // namespace deer::envs
