#pragma once

#include <string>
#include <string_view>

#include "deer/nn/tensor.hpp"

namespace deer::nn {

enum class Activation { identity, tanh, relu };

std::string_view to_string(Activation a);
Activation activation_from_string(std::string_view name);

/// Applies the activation element-wise.
Matrix apply(Activation a, const Matrix& z);

/// Multiplies `dy` by the activation derivative, expressed through the
/// activation output `y` (valid for all three supported activations).
Matrix apply_derivative(Activation a, const Matrix& y, const Matrix& dy);

}  // namespace deer::nn
