#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lg4av/corpus.hpp"
#include "lg4av/encoder.hpp"
#include "lg4av/graph.hpp"
#include "lg4av/optimizer.hpp"

namespace lg4av::model {

using corpus::AuthorId;

enum class Variant { full, k0, frozen };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// Encoder with per-author classification rows, propagated author features and the
/// sigmoid head over the fused vector. Author order is shared by the vocabulary's
/// classification rows and the feature rows.
class Lg4avModel {
public:
    Lg4avModel() = default;
    /// Throws when the vocabulary authors differ from the feature row order or the
    /// feature width differs from the encoder output width. k0 truncates to [X].
    Lg4avModel(encoder::Vocabulary vocab, encoder::EncoderParams encoder,
               graph::PropagatedFeatures features, Variant variant);

    const encoder::Vocabulary& vocab() const noexcept { return vocab_; }
    const encoder::EncoderParams& encoder() const noexcept { return encoder_; }
    encoder::EncoderParams& encoder() noexcept { return encoder_; }
    const graph::PropagatedFeatures& features() const noexcept { return features_; }
    const Vector& head_weights() const noexcept { return head_weights_; }
    Vector& head_weights() noexcept { return head_weights_; }
    double head_bias() const noexcept { return head_bias_; }
    double& head_bias() noexcept { return head_bias_; }
    int k() const noexcept { return features_.k; }
    Variant variant() const noexcept { return variant_; }
    std::size_t out_dim() const noexcept { return encoder_.config.out_dim; }
    /// Authors present at training time; they come first in author order.
    std::size_t old_author_count() const noexcept { return old_authors_; }
    const std::vector<AuthorId>& authors() const noexcept { return vocab_.authors(); }

    /// Feature row of the author; throws LookupError if the author is unprepared.
    std::size_t author_index(const AuthorId& a) const;

    /// Appends classification rows (copies of the base CLS row) for new authors and
    /// installs features over the extended author list.
    void add_new_authors(const std::vector<AuthorId>& authors, graph::PropagatedFeatures features);
    /// Restores state from serialized parts; used by checkpoint loading.
    void set_old_author_count(std::size_t n) { old_authors_ = n; }

    bool operator==(const Lg4avModel& o) const;

private:
    encoder::Vocabulary vocab_;
    encoder::EncoderParams encoder_;
    graph::PropagatedFeatures features_;
    Vector head_weights_;
    double head_bias_ = 0.0;
    Variant variant_ = Variant::full;
    std::size_t old_authors_ = 0;
    std::map<AuthorId, std::size_t> index_;
};

/// Concatenation over l = 0..k of (Â^l X)_i * lm_out (elementwise).
Vector fuse(const graph::PropagatedFeatures& features, std::size_t author_index, const Vector& lm_out);

double sigmoid(double z);

inline constexpr double kBceEps = 1e-7;
/// Binary cross entropy with the score clamped to [kBceEps, 1 - kBceEps].
double bce_loss(double score, int label);

/// Counter-based dropout key: the mask for one forward pass is a pure function of
/// (seed, step, example).
struct DropoutKey {
    std::uint64_t seed = 0;
    std::uint64_t step = 0;
    std::uint64_t example = 0;
};

/// Inverted dropout mask (entries 0 or 1/(1-p)).
Vector dropout_mask(std::size_t size, double p, const DropoutKey& key);

struct ForwardCache {
    encoder::EncodeCache encode;
    Vector lm_out;
    Vector fused;    // after dropout
    Vector mask;     // empty when dropout is off
    double logit = 0.0;
    double score = 0.0;
};

/// sigma(dropout(fuse(features, i, encode(tokenize(body, author_i)))) . W + b).
/// Dropout applies only when `dropout` is set.
double forward(const Lg4avModel& m, std::size_t author_index, const encoder::TokenSequence& seq,
               const std::optional<std::pair<double, DropoutKey>>& dropout = std::nullopt,
               ForwardCache* cache = nullptr);
double forward(const Lg4avModel& m, std::size_t author_index, const corpus::Document& doc);

/// Head and encoder gradients of a loss with d(loss)/d(logit) = dlogit.
struct ModelGradients {
    encoder::EncoderGradients encoder;
    Vector head_weights;
    double head_bias = 0.0;

    explicit ModelGradients(const Lg4avModel& m);
    void set_zero();
};

void backward(const Lg4avModel& m, std::size_t author_index, const ForwardCache& cache, double dlogit,
              ModelGradients& grads, bool include_encoder = true);

struct TrainConfig {
    int epochs = 3;
    double lr = 2e-5;
    double weight_decay = 0.01;
    std::size_t batch_size = 4;
    std::size_t grad_accum = 4;
    double dropout = 0.1;
    long warmup_steps = 0;
    std::uint64_t seed = 0;

    void validate() const;
    std::size_t effective_batch() const noexcept { return batch_size * grad_accum; }
};

struct StepLog {
    int epoch = 0;
    long step = 0;
    double lr = 0.0;
    double loss = 0.0;
};

struct TrainResult {
    std::vector<double> epoch_loss;  // mean example loss per epoch
    std::vector<StepLog> steps;
    long optimizer_steps = 0;
};

/// ceil(#examples / (batch_size * grad_accum)) * epochs
long total_optimizer_steps(std::size_t n_examples, const TrainConfig& cfg);

/// Number of scalar parameters the variant updates.
std::size_t trainable_parameter_count(const Lg4avModel& m);

struct TrainingExample {
    std::size_t author_index = 0;
    encoder::TokenSequence tokens;
    int label = 0;
};

/// Tokenizes each pair with its author's classification token.
std::vector<TrainingExample> make_training_examples(const Lg4avModel& m,
                                                    const corpus::AuthorshipIndex& index,
                                                    const corpus::ExampleSet& examples);

/// Seeded shuffling each epoch, mean BCE per micro-batch, gradients accumulated over
/// grad_accum micro-batches, one AdamW step with linearly decayed lr per group.
/// The frozen variant updates only the head.
TrainResult train(Lg4avModel& m, const std::vector<TrainingExample>& examples, const TrainConfig& cfg);

/// Classification rows of the embedding table; the first `old_count` authors are old.
class AuthorClsTable {
public:
    explicit AuthorClsTable(Lg4avModel& m) : m_(m) {}

    Vector row(const AuthorId& a) const;
    void set_row(const AuthorId& a, const Vector& v);
    bool is_old(const AuthorId& a) const;
    std::size_t old_count() const noexcept { return m_.old_author_count(); }
    const std::vector<AuthorId>& authors() const noexcept { return m_.authors(); }

private:
    Lg4avModel& m_;
};

/// Mean of the old neighbours' rows, or of all old authors' rows when there are none.
/// Writes the result into the new author's row and returns it.
Vector new_author_cls(AuthorClsTable& table, const graph::CoauthorGraph& g_new, const AuthorId& a_new);

/// Adds rows for `new_authors`, sets their classification rows from the extended graph
/// and switches the model to the extended features. `extended.graph` must list the
/// model's authors first, in order, followed by `new_authors`.
void prepare_new_authors(Lg4avModel& m, const std::vector<AuthorId>& new_authors,
                         const graph::ExtendedGraph& extended);

/// Scores pairs in evaluation mode. Needs only the model and the pairs.
std::vector<double> verify(const Lg4avModel& m,
                           const std::vector<std::pair<AuthorId, corpus::Document>>& pairs);

/// Per-author mean of the encoder output over the author's documents in `pool`
/// (base classification token). Authors without documents get a zero row.
Matrix mean_cls_features(const encoder::EncoderParams& encoder, const encoder::Vocabulary& vocab,
                         const corpus::AuthorshipIndex& index, const std::vector<AuthorId>& authors,
                         const corpus::DocIdSet& pool);

/// Per-column affine map fitted on the training authors' features: zero mean and unit
/// variance per column (columns with zero variance are only centred).
struct ColumnScaling {
    Vector mean;
    Vector scale;

    Matrix apply(const Matrix& x) const;
};

ColumnScaling fit_column_scaling(const Matrix& x);

}  // namespace lg4av::model
