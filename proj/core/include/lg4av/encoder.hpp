#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lg4av/tensor.hpp"
#include "lg4av/vocabulary.hpp"

namespace lg4av::encoder {

struct EncoderConfig {
    std::size_t hidden = 64;
    std::size_t heads = 4;
    std::size_t layers = 2;
    std::size_t ffn = 0;  // 0 selects 4 * hidden
    std::size_t max_len = 128;
    std::size_t out_dim = 64;
    double ln_eps = 1e-12;
    double init_std = 0.02;

    std::size_t ffn_width() const noexcept { return ffn == 0 ? 4 * hidden : ffn; }
    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

struct LayerParams {
    Matrix wq, wk, wv, wo;  // hidden x hidden, applied as x * W
    Vector bq, bk, bv, bo;
    Vector ln1_gain, ln1_bias;
    Matrix w1;  // hidden x ffn
    Vector b1;
    Matrix w2;  // ffn x hidden
    Vector b2;
    Vector ln2_gain, ln2_bias;

    bool operator==(const LayerParams&) const = default;
};

/// Post-LN transformer encoder. Also used, zero-filled, as its own gradient container.
struct EncoderParams {
    EncoderConfig config;
    Matrix token_embeddings;       // vocabulary rows then author classification rows
    Matrix positional_embeddings;  // max_len x hidden
    std::vector<LayerParams> layers;
    Matrix projection;             // hidden x out_dim; empty when hidden == out_dim
    Vector projection_bias;

    bool has_projection() const noexcept { return projection.size() != 0; }
    /// Same shapes, all zeros.
    EncoderParams zeros_like() const;
    void set_zero();
    /// Appends `count` author classification rows, each a copy of the base CLS row.
    void append_author_rows(std::size_t count);

    bool operator==(const EncoderParams&) const = default;
};

std::size_t parameter_count(const EncoderParams& p);

/// normal(0, init_std) weights and embeddings, zero biases, unit layer-norm gains.
/// Every author classification row starts as an exact copy of the base CLS row.
EncoderParams init_encoder(const EncoderConfig& config, const Vocabulary& vocab, std::uint64_t seed);

struct LayerCache {
    Matrix input;  // L x h
    Matrix q;      // Lq x h (only the first Lq query rows are needed)
    Matrix k, v;   // L x h
    std::vector<Matrix> probs;  // per head, Lq x L
    Matrix context;             // Lq x h
    Matrix ln1_hat;
    Vector ln1_inv_std;
    Matrix ln1_out;
    Matrix ffn_pre;
    Matrix ffn_act;
    Matrix ln2_hat;
    Vector ln2_inv_std;
};

struct EncodeCache {
    std::vector<std::size_t> ids;
    std::vector<LayerCache> layers;
    Vector cls_hidden;
};

/// Gradients plus the embedding rows they touch.
struct EncoderGradients {
    EncoderParams d;
    std::vector<unsigned char> touched_rows;

    explicit EncoderGradients(const EncoderParams& like);
    void set_zero();
    EncoderGradients& operator+=(const EncoderGradients& o);
};

/// Position-0 output of the encoder, projected to out_dim when hidden != out_dim.
/// The final block computes only the position-0 query row.
Vector encode(const EncoderParams& p, const TokenSequence& seq, EncodeCache* cache = nullptr);

/// Accumulates d(output)/d(params) contracted with `upstream` into `grads`.
void encode_backward(const EncoderParams& p, const EncodeCache& cache, const Vector& upstream,
                     EncoderGradients& grads);

double gelu(double x);
double gelu_derivative(double x);

}  // namespace lg4av::encoder
