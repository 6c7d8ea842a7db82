#include "deer/nn/activation.hpp"

#include <stdexcept>

namespace deer::nn {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "identity";
}

Activation activation_from_string(std::string_view name) {
    if (name == "identity") return Activation::identity;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw std::invalid_argument("unknown activation: " + std::string(name));
}

Matrix apply(Activation a, const Matrix& z) {
    switch (a) {
        case Activation::identity: return z;
        case Activation::tanh: return z.array().tanh().matrix();
        case Activation::relu: return z.cwiseMax(0.0);
    }
    return z;
}

Matrix apply_derivative(Activation a, const Matrix& y, const Matrix& dy) {
    switch (a) {
        case Activation::identity: return dy;
        case Activation::tanh: return (dy.array() * (1.0 - y.array().square())).matrix();
        case Activation::relu: return (dy.array() * (y.array() > 0.0).cast<double>()).matrix();
    }
    return dy;
}

}  // namespace deer::nn
