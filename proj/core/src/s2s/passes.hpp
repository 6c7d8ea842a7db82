#pragma once

#include <vector>

#include "deer/s2s/model.hpp"

namespace deer::s2s::detail {

struct EncoderTape {
    Matrix anchor;
    Matrix state_embedding;
    std::vector<Matrix> actions;
    std::vector<Matrix> action_embeddings;
    std::vector<nn::GruCell::Cache> gru;  // delay + 1 steps
};

struct DecoderStep {
    Matrix query;        // hb_{i-1}
    Matrix weights;      // attention weights for c_{i-1}
    Matrix context;      // c_{i-1}
    Matrix input_state;  // state fed to MLP_S2
    Matrix embedding;    // MLP_S2(input_state)
    Matrix gru_input;    // embedding (+) context
    nn::GruCell::Cache gru;
    Matrix head_input;   // hb_i (+) context
    Matrix prediction;
};

/// Encoder states (h_1, ..., h_{d+1}), each [K1 x B], from normalized inputs.
std::vector<Matrix> run_encoder(const Seq2SeqModel& model, const Matrix& anchor, const std::vector<Matrix>& actions,
                                EncoderTape* tape);

/// Decodes `steps` states. `labels` supplies the ground truth for teacher
/// forcing and may be empty when every feed_mask entry is 1.
std::vector<Matrix> run_decoder(const Seq2SeqModel& model, const std::vector<Matrix>& encoder_states,
                                const std::vector<Matrix>& labels, const Matrix& feed_mask, int steps,
                                std::vector<DecoderStep>* tape);

}  // namespace deer::s2s::detail
