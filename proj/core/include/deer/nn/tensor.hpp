#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace deer::nn {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class NonFiniteError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Non-owning view over one parameter (or gradient) block.
struct ParamSpan {
    std::string name;
    std::span<double> values;
};

using ParamList = std::vector<ParamSpan>;

inline ParamSpan make_span(std::string name, Matrix& m) {
    return {std::move(name), std::span<double>(m.data(), static_cast<std::size_t>(m.size()))};
}

inline ParamSpan make_span(std::string name, Vector& v) {
    return {std::move(name), std::span<double>(v.data(), static_cast<std::size_t>(v.size()))};
}

inline std::string join_name(std::string_view prefix, std::string_view leaf) {
    if (prefix.empty()) return std::string(leaf);
    std::string out(prefix);
    out += '.';
    out += leaf;
    return out;
}

inline void require_shape(bool ok, std::string_view what) {
    if (!ok) throw ShapeError(std::string(what));
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& x) {
    return x.allFinite();
}

/// Uniform(-bound, bound) fill, drawn in column-major order.
void fill_uniform(Matrix& m, double bound, Rng& rng);
void fill_uniform(Vector& v, double bound, Rng& rng);

/// Sum of squares over all entries of a parameter list.
double squared_norm(const ParamList& list);

/// Zero every entry referenced by the list.
void zero(const ParamList& list);

}  // namespace deer::nn
