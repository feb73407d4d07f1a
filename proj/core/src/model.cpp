#include "lg4av/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lg4av/error.hpp"
#include "lg4av/random.hpp"

namespace lg4av::model {

using Index = Eigen::Index;

std::string to_string(Variant v) {
    switch (v) {
        case Variant::full: return "full";
        case Variant::k0: return "k0";
        case Variant::frozen: return "frozen";
    }
    return "?";
}

Variant variant_from_string(const std::string& s) {
    if (s == "full") return Variant::full;
    if (s == "k0") return Variant::k0;
    if (s == "frozen") return Variant::frozen;
    throw Error("unknown variant \"" + s + "\" (expected full, k0 or frozen)");
}

Lg4avModel::Lg4avModel(encoder::Vocabulary vocab, encoder::EncoderParams encoder,
                       graph::PropagatedFeatures features, Variant variant)
    : vocab_(std::move(vocab)), encoder_(std::move(encoder)), features_(std::move(features)),
      variant_(variant) {
    if (features_.matrices.empty()) throw Error("model needs at least the unpropagated features");
    if (variant_ == Variant::k0) {
        features_.matrices.resize(1);
        features_.k = 0;
    }
    if (features_.matrices.size() != static_cast<std::size_t>(features_.k) + 1) {
        throw Error("propagated feature list does not match k");
    }
    if (features_.rows() != vocab_.author_count()) {
        throw DimensionError("feature rows do not match the author classification rows");
    }
    if (features_.dim() != encoder_.config.out_dim) {
        throw DimensionError("feature width " + std::to_string(features_.dim()) +
                             " differs from encoder output width " +
                             std::to_string(encoder_.config.out_dim));
    }
    if (static_cast<std::size_t>(encoder_.token_embeddings.rows()) != vocab_.rows()) {
        throw DimensionError("embedding table does not match the vocabulary");
    }
    head_weights_ = Vector::Zero(static_cast<Index>(out_dim() * (features_.k + 1)));
    old_authors_ = vocab_.author_count();
    for (std::size_t i = 0; i < vocab_.authors().size(); ++i) index_[vocab_.authors()[i]] = i;
}

std::size_t Lg4avModel::author_index(const AuthorId& a) const {
    auto it = index_.find(a);
    if (it == index_.end() || it->second >= features_.rows()) {
        throw LookupError("author \"" + a +
                          "\" is not prepared; set its classification row with new_author_cls "
                          "and its features with extend_graph first");
    }
    return it->second;
}

void Lg4avModel::add_new_authors(const std::vector<AuthorId>& authors, graph::PropagatedFeatures features) {
    auto rows = vocab_.add_authors(authors);
    if (rows.size() != authors.size()) throw Error("new author already has a classification row");
    encoder_.append_author_rows(rows.size());
    if (variant_ == Variant::k0) {
        features.matrices.resize(1);
        features.k = 0;
    }
    if (features.k != features_.k || features.rows() != vocab_.author_count() ||
        features.dim() != features_.dim()) {
        throw DimensionError("extended features do not match the extended author list");
    }
    features_ = std::move(features);
    for (std::size_t i = 0; i < vocab_.authors().size(); ++i) index_[vocab_.authors()[i]] = i;
}

bool Lg4avModel::operator==(const Lg4avModel& o) const {
    if (!(vocab_ == o.vocab_ && encoder_ == o.encoder_ && head_weights_ == o.head_weights_ &&
          head_bias_ == o.head_bias_ && variant_ == o.variant_ && old_authors_ == o.old_authors_ &&
          features_.k == o.features_.k && features_.matrices.size() == o.features_.matrices.size())) {
        return false;
    }
    for (std::size_t l = 0; l < features_.matrices.size(); ++l) {
        if (features_.matrices[l] != o.features_.matrices[l]) return false;
    }
    return true;
}

Vector fuse(const graph::PropagatedFeatures& features, std::size_t author_index, const Vector& lm_out) {
    const auto s = static_cast<Index>(features.dim());
    if (lm_out.size() != s) {
        throw DimensionError("encoder output has " + std::to_string(lm_out.size()) +
                             " entries, features have " + std::to_string(s));
    }
    if (author_index >= features.rows()) throw DimensionError("author index out of range");
    Vector v(s * static_cast<Index>(features.matrices.size()));
    for (std::size_t l = 0; l < features.matrices.size(); ++l) {
        v.segment(static_cast<Index>(l) * s, s) =
            features.matrices[l].row(static_cast<Index>(author_index)).transpose().cwiseProduct(lm_out);
    }
    return v;
}

double sigmoid(double z) {
    if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

double bce_loss(double score, int label) {
    const double p = std::clamp(score, kBceEps, 1.0 - kBceEps);
    return label ? -std::log(p) : -std::log(1.0 - p);
}

Vector dropout_mask(std::size_t size, double p, const DropoutKey& key) {
    Vector mask(static_cast<Index>(size));
    const std::uint64_t base = derive_seed(key.seed, key.step, key.example);
    const double keep_scale = 1.0 / (1.0 - p);
    for (std::size_t j = 0; j < size; ++j) {
        mask(static_cast<Index>(j)) = unit_double(mix64(base + j)) < p ? 0.0 : keep_scale;
    }
    return mask;
}

namespace {

double head_forward(const Lg4avModel& m, std::size_t author_index, const Vector& lm_out,
                    const std::optional<std::pair<double, DropoutKey>>& dropout, ForwardCache* cache) {
    Vector v = fuse(m.features(), author_index, lm_out);
    Vector mask;
    if (dropout && dropout->first > 0.0) {
        mask = dropout_mask(static_cast<std::size_t>(v.size()), dropout->first, dropout->second);
        v.array() *= mask.array();
    }
    const double logit = v.dot(m.head_weights()) + m.head_bias();
    const double score = sigmoid(logit);
    if (cache) {
        cache->lm_out = lm_out;
        cache->fused = std::move(v);
        cache->mask = std::move(mask);
        cache->logit = logit;
        cache->score = score;
    }
    return score;
}

}  // namespace

double forward(const Lg4avModel& m, std::size_t author_index, const encoder::TokenSequence& seq,
               const std::optional<std::pair<double, DropoutKey>>& dropout, ForwardCache* cache) {
    Vector lm = encoder::encode(m.encoder(), seq, cache ? &cache->encode : nullptr);
    return head_forward(m, author_index, lm, dropout, cache);
}

double forward(const Lg4avModel& m, std::size_t author_index, const corpus::Document& doc) {
    const auto& author = m.authors().at(author_index);
    return forward(m, author_index, encoder::tokenize(m.vocab(), doc.body, author, m.encoder().config.max_len));
}

ModelGradients::ModelGradients(const Lg4avModel& m)
    : encoder(m.encoder()), head_weights(Vector::Zero(m.head_weights().size())) {}

void ModelGradients::set_zero() {
    encoder.set_zero();
    head_weights.setZero();
    head_bias = 0.0;
}

void backward(const Lg4avModel& m, std::size_t author_index, const ForwardCache& cache, double dlogit,
              ModelGradients& grads, bool include_encoder) {
    grads.head_weights += dlogit * cache.fused;
    grads.head_bias += dlogit;
    if (!include_encoder) return;
    Vector dv = dlogit * m.head_weights();
    if (cache.mask.size() != 0) dv.array() *= cache.mask.array();
    const auto s = static_cast<Index>(m.out_dim());
    Vector dlm = Vector::Zero(s);
    const auto& feats = m.features().matrices;
    for (std::size_t l = 0; l < feats.size(); ++l) {
        dlm += feats[l].row(static_cast<Index>(author_index)).transpose().cwiseProduct(
            dv.segment(static_cast<Index>(l) * s, s));
    }
    encoder::encode_backward(m.encoder(), cache.encode, dlm, grads.encoder);
}

void TrainConfig::validate() const {
    if (epochs <= 0 || lr <= 0.0 || batch_size == 0 || grad_accum == 0) {
        throw Error("epochs, lr, batch_size and grad_accum must be positive");
    }
    if (weight_decay < 0.0 || dropout < 0.0 || dropout >= 1.0) {
        throw Error("weight_decay must be >= 0 and dropout in [0, 1)");
    }
    if (warmup_steps != 0) throw Error("warm-up is not supported; the schedule decays linearly from step 0");
}

long total_optimizer_steps(std::size_t n_examples, const TrainConfig& cfg) {
    const auto per_epoch = (n_examples + cfg.effective_batch() - 1) / cfg.effective_batch();
    return static_cast<long>(per_epoch) * cfg.epochs;
}

std::size_t trainable_parameter_count(const Lg4avModel& m) {
    std::size_t n = static_cast<std::size_t>(m.head_weights().size()) + 1;
    if (m.variant() == Variant::frozen) return n;
    return n + encoder::parameter_count(m.encoder());
}

std::vector<TrainingExample> make_training_examples(const Lg4avModel& m,
                                                    const corpus::AuthorshipIndex& index,
                                                    const corpus::ExampleSet& examples) {
    std::vector<TrainingExample> out;
    out.reserve(examples.pairs.size());
    for (const auto& p : examples.pairs) {
        TrainingExample e;
        e.author_index = m.author_index(p.author);
        e.tokens = encoder::tokenize(m.vocab(), index.doc(p.doc).body, p.author, m.encoder().config.max_len);
        e.label = p.label;
        out.push_back(std::move(e));
    }
    return out;
}

TrainResult train(Lg4avModel& m, const std::vector<TrainingExample>& examples, const TrainConfig& cfg) {
    cfg.validate();
    if (examples.empty()) throw TrainingError("no training examples");
    const bool frozen = m.variant() == Variant::frozen;
    const long total = total_optimizer_steps(examples.size(), cfg);
    LinearDecay schedule(cfg.lr, total);
    AdamW optimizer(AdamConfig{0.9, 0.999, 1e-8, cfg.weight_decay});
    ModelGradients grads(m);

    std::vector<ParamSlot> slots;
    if (!frozen) slots = encoder_slots(m.encoder(), &grads.encoder);
    slots.push_back({"head_weights", ParamKind::head, m.head_weights().data(), grads.head_weights.data(),
                     static_cast<std::size_t>(m.head_weights().size()), true, nullptr});
    slots.push_back({"head_bias", ParamKind::head, &m.head_bias(), &grads.head_bias, 1, false, nullptr});

    // a frozen encoder is a fixed function of (author, document)
    std::vector<Vector> frozen_lm;
    if (frozen) {
        frozen_lm.reserve(examples.size());
        for (const auto& e : examples) frozen_lm.push_back(encoder::encode(m.encoder(), e.tokens));
    }

    TrainResult result;
    std::vector<std::size_t> order(examples.size());
    long step = 0;
    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::mt19937_64 rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch), 0x5eedULL));
        std::shuffle(order.begin(), order.end(), rng);

        double epoch_loss = 0.0;
        double step_loss = 0.0;
        std::size_t step_examples = 0;
        std::size_t micro_in_group = 0;
        grads.set_zero();
        const std::size_t n_micro = (examples.size() + cfg.batch_size - 1) / cfg.batch_size;
        for (std::size_t mb = 0; mb < n_micro; ++mb) {
            const std::size_t begin = mb * cfg.batch_size;
            const std::size_t end = std::min(begin + cfg.batch_size, examples.size());
            const double scale = 1.0 / (static_cast<double>(end - begin) * static_cast<double>(cfg.grad_accum));
            for (std::size_t pos = begin; pos < end; ++pos) {
                const std::size_t ex = order[pos];
                const auto& e = examples[ex];
                ForwardCache cache;
                const auto drop = std::make_optional(std::make_pair(
                    cfg.dropout, DropoutKey{cfg.seed, static_cast<std::uint64_t>(step), ex}));
                const double score = frozen ? head_forward(m, e.author_index, frozen_lm[ex], drop, &cache)
                                            : forward(m, e.author_index, e.tokens, drop, &cache);
                const double loss = bce_loss(score, e.label);
                if (!std::isfinite(cache.logit) || !std::isfinite(loss)) {
                    throw TrainingError("non-finite loss (seed " + std::to_string(cfg.seed) + ", step " +
                                        std::to_string(step) + ", example " + std::to_string(ex) + ")");
                }
                epoch_loss += loss;
                step_loss += loss;
                ++step_examples;
                // d(bce)/d(logit) = score - label
                backward(m, e.author_index, cache, (score - e.label) * scale, grads, !frozen);
            }
            ++micro_in_group;
            if (micro_in_group == cfg.grad_accum || mb + 1 == n_micro) {
                const double lr = schedule.at(step);
                optimizer.step(slots, lr);
                result.steps.push_back({epoch, step, lr, step_loss / static_cast<double>(step_examples)});
                ++step;
                step_loss = 0.0;
                step_examples = 0;
                micro_in_group = 0;
                grads.set_zero();
            }
        }
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(examples.size()));
    }
    result.optimizer_steps = step;
    return result;
}

Vector AuthorClsTable::row(const AuthorId& a) const {
    return m_.encoder().token_embeddings.row(static_cast<Index>(m_.vocab().cls_row(a))).transpose();
}

void AuthorClsTable::set_row(const AuthorId& a, const Vector& v) {
    m_.encoder().token_embeddings.row(static_cast<Index>(m_.vocab().cls_row(a))) = v.transpose();
}

bool AuthorClsTable::is_old(const AuthorId& a) const {
    if (!m_.vocab().has_author(a)) return false;
    const auto row = m_.vocab().cls_row(a);
    return row - m_.vocab().author_cls_offset() < m_.old_author_count();
}

Vector new_author_cls(AuthorClsTable& table, const graph::CoauthorGraph& g_new, const AuthorId& a_new) {
    const auto node = g_new.index_of(a_new);
    Vector sum;
    std::size_t count = 0;
    auto accumulate = [&](const AuthorId& b) {
        Vector r = table.row(b);
        if (count == 0) sum = std::move(r); else sum += r;
        ++count;
    };
    for (auto nb : g_new.neighbors(node)) {
        const auto& b = g_new.node_ids()[nb];
        if (table.is_old(b)) accumulate(b);
    }
    if (count == 0) {
        for (std::size_t i = 0; i < table.old_count(); ++i) accumulate(table.authors()[i]);
    }
    if (count == 0) throw Error("no old authors to derive a classification row from");
    Vector cls = sum / static_cast<double>(count);
    table.set_row(a_new, cls);
    return cls;
}

void prepare_new_authors(Lg4avModel& m, const std::vector<AuthorId>& new_authors,
                         const graph::ExtendedGraph& extended) {
    const auto& ids = extended.graph.node_ids();
    const auto& old = m.authors();
    if (ids.size() != old.size() + new_authors.size() ||
        !std::equal(old.begin(), old.end(), ids.begin()) ||
        !std::equal(new_authors.begin(), new_authors.end(), ids.begin() + static_cast<std::ptrdiff_t>(old.size()))) {
        throw Error("extended graph must list the model's authors followed by the new authors");
    }
    m.add_new_authors(new_authors, extended.features);
    AuthorClsTable table(m);
    for (const auto& a : new_authors) new_author_cls(table, extended.graph, a);
}

std::vector<double> verify(const Lg4avModel& m,
                           const std::vector<std::pair<AuthorId, corpus::Document>>& pairs) {
    std::vector<double> scores;
    scores.reserve(pairs.size());
    for (const auto& [author, doc] : pairs) {
        const auto i = m.author_index(author);
        scores.push_back(forward(m, i, doc));
    }
    return scores;
}

Matrix mean_cls_features(const encoder::EncoderParams& encoder, const encoder::Vocabulary& vocab,
                         const corpus::AuthorshipIndex& index, const std::vector<AuthorId>& authors,
                         const corpus::DocIdSet& pool) {
    Matrix x = Matrix::Zero(static_cast<Index>(authors.size()), static_cast<Index>(encoder.config.out_dim));
    std::map<corpus::DocId, Vector> cache;
    for (std::size_t i = 0; i < authors.size(); ++i) {
        std::size_t n = 0;
        for (const auto& d : index.docs_of(authors[i])) {
            if (!pool.contains(d)) continue;
            auto it = cache.find(d);
            if (it == cache.end()) {
                auto seq = encoder::tokenize(vocab, index.doc(d).body, std::nullopt, encoder.config.max_len);
                it = cache.emplace(d, encoder::encode(encoder, seq)).first;
            }
            x.row(static_cast<Index>(i)) += it->second.transpose();
            ++n;
        }
        if (n > 0) x.row(static_cast<Index>(i)) /= static_cast<double>(n);
    }
    return x;
}

ColumnScaling fit_column_scaling(const Matrix& x) {
    if (x.rows() == 0) throw DimensionError("column scaling needs at least one row");
    ColumnScaling s;
    s.mean = x.colwise().mean().transpose();
    s.scale = Vector::Ones(x.cols());
    for (Index c = 0; c < x.cols(); ++c) {
        const double var = (x.col(c).array() - s.mean(c)).square().mean();
        if (var > 0.0) s.scale(c) = 1.0 / std::sqrt(var);
    }
    return s;
}

Matrix ColumnScaling::apply(const Matrix& x) const {
    if (x.cols() != mean.size()) throw DimensionError("column scaling width mismatch");
    Matrix out = x;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() *= scale.transpose().array();
    return out;
}

}  // namespace lg4av::model
