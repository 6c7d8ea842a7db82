#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "deer/data/trajectory_store.hpp"
#include "deer/delay/information_state.hpp"
#include "deer/nn/checkpoint.hpp"
#include "deer/nn/dense.hpp"
#include "deer/nn/gru.hpp"

namespace deer::s2s {

using nn::Matrix;
using nn::Vector;

struct Seq2SeqConfig {
    int state_dim = 0;
    int action_dim = 0;
    int hidden = 256;  // K1, GRU hidden size and representation length
    int embed = 64;    // K2, embedding width of the MLP_* input layers
    int max_delay = 8; // D
    double teacher_forcing = 0.5;  // p: probability of feeding the model's own prediction
    nn::Activation embed_activation = nn::Activation::tanh;

    void validate() const;
};

/// Affine standardization applied before every embedding. States use
/// dataset statistics; actions map their bounds onto [-1, 1].
struct Normalizer {
    Vector state_mean;
    Vector state_scale;
    Vector action_center;
    Vector action_scale;

    static Normalizer identity(int state_dim, int action_dim);
    static Normalizer fit(const data::TrajectoryStore& store, const envs::EnvSpec& spec);

    Matrix state(const Matrix& raw) const;
    Matrix unstate(const Matrix& normalized) const;
    Matrix action(const Matrix& raw) const;
};

/// Fixed-length summary of an information state.
struct ContextRepresentation {
    Vector values;  // length K1
    int delay = 0;
};

/// GRU encoder-decoder. Encoder: h_1 = GRU_en(MLP_S1(s)), h_{i} =
/// GRU_en(MLP_A(a_{i-2}), h_{i-1}); the representation is h_{z+1}. Decoder
/// (training and state prediction): attention over (h_1..h_{z+1}), input
/// MLP_S2(previous state) concatenated with the context, output
/// MLP_S3(hidden concatenated with context).
class Seq2SeqModel {
public:
    Seq2SeqConfig config;
    Normalizer normalizer;
    nn::DenseLayer state_embed;    // MLP_S1: state -> K2
    nn::DenseLayer action_embed;   // MLP_A: action -> K2
    nn::GruCell encoder_gru;       // K2 -> K1
    nn::DenseLayer decoder_embed;  // MLP_S2: state -> K2
    nn::GruCell decoder_gru;       // K1 + K2 -> K1
    nn::DenseLayer output_head;    // MLP_S3: 2 K1 -> state
    bool trained = false;

    static Seq2SeqModel create(const Seq2SeqConfig& cfg, std::uint64_t seed);
    static Seq2SeqModel zeros(const Seq2SeqConfig& cfg);
    Seq2SeqModel zeros_like() const { return zeros(config); }

    ContextRepresentation encode(const delay::InformationState& info) const;
    /// Autoregressive decode of the z missing states (raw units); the last
    /// entry estimates the current true state.
    std::vector<Vector> predict_states(const delay::InformationState& info) const;

    void collect(nn::ParamList& out);
    nn::ParamList parameters();

    nn::Checkpoint to_checkpoint() const;
    static Seq2SeqModel from_checkpoint(const nn::Checkpoint& ckpt);
};

/// Receives the diagnostic issued when predict_states runs on an untrained
/// model. The default prints the first occurrence to stderr. An empty
/// function restores the default.
void set_untrained_warning_handler(std::function<void(const std::string&)> handler);

inline ContextRepresentation encode(const Seq2SeqModel& model, const delay::InformationState& info) {
    return model.encode(info);
}

}  // namespace deer::s2s
