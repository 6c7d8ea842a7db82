#include "deer/nn/mlp.hpp"

#include <string>

namespace deer::nn {

Mlp Mlp::random(Index in, const std::vector<int>& hidden, Index out, Activation hidden_activation, Rng& rng) {
    Mlp mlp;
    Index prev = in;
    for (int width : hidden) {
        mlp.layers.push_back(DenseLayer::random(prev, width, hidden_activation, rng));
        prev = width;
    }
    mlp.layers.push_back(DenseLayer::random(prev, out, Activation::identity, rng));
    return mlp;
}

Mlp Mlp::zeros_like() const {
    Mlp out;
    for (const auto& l : layers) out.layers.push_back(l.zeros_like());
    return out;
}

Matrix Mlp::forward(const Matrix& x, Cache* cache) const {
    if (cache) {
        cache->activations.clear();
        cache->activations.push_back(x);
    }
    Matrix h = x;
    for (const auto& layer : layers) {
        h = layer.forward_batch(h);
        if (cache) cache->activations.push_back(h);
    }
    return h;
}

Matrix Mlp::backward(const Cache& cache, const Matrix& dy, Mlp* grad) const {
    require_shape(cache.activations.size() == layers.size() + 1, "mlp backward: cache does not match network");
    Matrix d = dy;
    for (std::size_t i = layers.size(); i-- > 0;) {
        const auto& layer = layers[i];
        const Matrix& x = cache.activations[i];
        const Matrix& y = cache.activations[i + 1];
        if (grad) {
            d = layer.backward(x, y, d, grad->layers[i]);
        } else {
            const Matrix dz = apply_derivative(layer.activation, y, d);
            d = layer.weight.transpose() * dz;
        }
    }
    return d;
}

void Mlp::collect(std::string_view prefix, ParamList& out) {
    for (std::size_t i = 0; i < layers.size(); ++i)
        layers[i].collect(join_name(prefix, "layer" + std::to_string(i)), out);
}

void Mlp::polyak(const Mlp& source, Mlp& target, double tau) {
    require_shape(source.layers.size() == target.layers.size(), "polyak: network depth mismatch");
    for (std::size_t i = 0; i < source.layers.size(); ++i) {
        auto& t = target.layers[i];
        const auto& s = source.layers[i];
        t.weight = (1.0 - tau) * t.weight + tau * s.weight;
        t.bias = (1.0 - tau) * t.bias + tau * s.bias;
    }
}

}  // namespace deer::nn
