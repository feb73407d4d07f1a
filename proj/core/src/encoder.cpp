#include "lg4av/encoder.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "lg4av/error.hpp"

namespace lg4av::encoder {

namespace {

using Index = Eigen::Index;

Index idx(std::size_t n) { return static_cast<Index>(n); }

void fill_normal(Matrix& m, std::mt19937_64& rng, double stddev) {
    std::normal_distribution<double> dist(0.0, stddev);
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
}

struct LayerNormOut {
    Matrix out;
    Matrix hat;
    Vector inv_std;
};

LayerNormOut layer_norm(const Matrix& x, const Vector& gain, const Vector& bias, double eps) {
    LayerNormOut r;
    r.hat.resize(x.rows(), x.cols());
    r.inv_std.resize(x.rows());
    const double n = static_cast<double>(x.cols());
    for (Index i = 0; i < x.rows(); ++i) {
        const double mean = x.row(i).sum() / n;
        auto centered = x.row(i).array() - mean;
        const double var = centered.square().sum() / n;
        const double inv = 1.0 / std::sqrt(var + eps);
        r.inv_std(i) = inv;
        r.hat.row(i) = centered * inv;
    }
    r.out = (r.hat.array().rowwise() * gain.transpose().array()).rowwise() + bias.transpose().array();
    return r;
}

// Returns d(input); accumulates gain and bias gradients.
Matrix layer_norm_backward(const Matrix& dy, const Matrix& hat, const Vector& inv_std,
                           const Vector& gain, Vector& dgain, Vector& dbias) {
    dgain += (dy.array() * hat.array()).colwise().sum().transpose().matrix();
    dbias += dy.colwise().sum().transpose();
    Matrix dhat = dy.array().rowwise() * gain.transpose().array();
    Matrix dx(dy.rows(), dy.cols());
    const double n = static_cast<double>(dy.cols());
    for (Index i = 0; i < dy.rows(); ++i) {
        const double sum_dhat = dhat.row(i).sum();
        const double sum_dhat_hat = dhat.row(i).dot(hat.row(i));
        dx.row(i) = (inv_std(i) / n) *
                    (n * dhat.row(i).array() - sum_dhat - hat.row(i).array() * sum_dhat_hat);
    }
    return dx;
}

Matrix affine(const Matrix& x, const Matrix& w, const Vector& b) {
    Matrix y = x * w;
    y.rowwise() += b.transpose();
    return y;
}

LayerCache layer_forward(const LayerParams& lp, const EncoderConfig& cfg, const Matrix& x,
                         const std::vector<unsigned char>& mask, Index query_rows) {
    LayerCache c;
    const Index len = x.rows();
    const Index heads = idx(cfg.heads);
    const Index dh = idx(cfg.hidden / cfg.heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    c.input = x;
    c.q = affine(x.topRows(query_rows), lp.wq, lp.bq);
    c.k = affine(x, lp.wk, lp.bk);
    c.v = affine(x, lp.wv, lp.bv);
    c.context.resize(query_rows, x.cols());
    c.probs.resize(static_cast<std::size_t>(heads));
    for (Index h = 0; h < heads; ++h) {
        Matrix s = (c.q.middleCols(h * dh, dh) * c.k.middleCols(h * dh, dh).transpose()) * scale;
        Matrix& p = c.probs[static_cast<std::size_t>(h)];
        p.resize(query_rows, len);
        for (Index i = 0; i < query_rows; ++i) {
            double mx = -std::numeric_limits<double>::infinity();
            for (Index j = 0; j < len; ++j) {
                if (mask[static_cast<std::size_t>(j)]) mx = std::max(mx, s(i, j));
            }
            double total = 0.0;
            for (Index j = 0; j < len; ++j) {
                const double e = mask[static_cast<std::size_t>(j)] ? std::exp(s(i, j) - mx) : 0.0;
                p(i, j) = e;
                total += e;
            }
            p.row(i) /= total;
        }
        c.context.middleCols(h * dh, dh) = p * c.v.middleCols(h * dh, dh);
    }
    Matrix r1 = x.topRows(query_rows) + affine(c.context, lp.wo, lp.bo);
    auto ln1 = layer_norm(r1, lp.ln1_gain, lp.ln1_bias, cfg.ln_eps);
    c.ln1_hat = std::move(ln1.hat);
    c.ln1_inv_std = std::move(ln1.inv_std);
    c.ln1_out = std::move(ln1.out);

    c.ffn_pre = affine(c.ln1_out, lp.w1, lp.b1);
    c.ffn_act = c.ffn_pre.unaryExpr([](double v) { return gelu(v); });
    Matrix r2 = c.ln1_out + affine(c.ffn_act, lp.w2, lp.b2);
    auto ln2 = layer_norm(r2, lp.ln2_gain, lp.ln2_bias, cfg.ln_eps);
    c.ln2_hat = std::move(ln2.hat);
    c.ln2_inv_std = std::move(ln2.inv_std);
    return c;
}

Matrix layer_output(const LayerParams& lp, const LayerCache& c) {
    return (c.ln2_hat.array().rowwise() * lp.ln2_gain.transpose().array()).rowwise() +
           lp.ln2_bias.transpose().array();
}

// Returns d(layer input), L x h.
Matrix layer_backward(const LayerParams& lp, const EncoderConfig& cfg, const LayerCache& c,
                      const Matrix& dy, LayerParams& g) {
    const Index len = c.input.rows();
    const Index query_rows = c.q.rows();
    const Index heads = idx(cfg.heads);
    const Index dh = idx(cfg.hidden / cfg.heads);
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    Matrix dr2 = layer_norm_backward(dy, c.ln2_hat, c.ln2_inv_std, lp.ln2_gain, g.ln2_gain, g.ln2_bias);
    g.w2.noalias() += c.ffn_act.transpose() * dr2;
    g.b2 += dr2.colwise().sum().transpose();
    Matrix dact = dr2 * lp.w2.transpose();
    Matrix dpre = dact.array() * c.ffn_pre.unaryExpr([](double v) { return gelu_derivative(v); }).array();
    g.w1.noalias() += c.ln1_out.transpose() * dpre;
    g.b1 += dpre.colwise().sum().transpose();
    Matrix dln1 = dr2 + dpre * lp.w1.transpose();

    Matrix dr1 = layer_norm_backward(dln1, c.ln1_hat, c.ln1_inv_std, lp.ln1_gain, g.ln1_gain, g.ln1_bias);
    Matrix dx = Matrix::Zero(len, c.input.cols());
    dx.topRows(query_rows) += dr1;

    g.wo.noalias() += c.context.transpose() * dr1;
    g.bo += dr1.colwise().sum().transpose();
    Matrix dctx = dr1 * lp.wo.transpose();

    Matrix dq(query_rows, c.q.cols());
    Matrix dk(len, c.k.cols());
    Matrix dv(len, c.v.cols());
    for (Index h = 0; h < heads; ++h) {
        const Matrix& p = c.probs[static_cast<std::size_t>(h)];
        auto dctx_h = dctx.middleCols(h * dh, dh);
        Matrix dp = dctx_h * c.v.middleCols(h * dh, dh).transpose();
        dv.middleCols(h * dh, dh) = p.transpose() * dctx_h;
        Vector row_dot = (dp.array() * p.array()).rowwise().sum();
        Matrix ds = p.array() * (dp.colwise() - row_dot).array();
        dq.middleCols(h * dh, dh) = (ds * c.k.middleCols(h * dh, dh)) * scale;
        dk.middleCols(h * dh, dh) = (ds.transpose() * c.q.middleCols(h * dh, dh)) * scale;
    }
    g.wq.noalias() += c.input.topRows(query_rows).transpose() * dq;
    g.bq += dq.colwise().sum().transpose();
    g.wk.noalias() += c.input.transpose() * dk;
    g.bk += dk.colwise().sum().transpose();
    g.wv.noalias() += c.input.transpose() * dv;
    g.bv += dv.colwise().sum().transpose();
    dx.topRows(query_rows).noalias() += dq * lp.wq.transpose();
    dx.noalias() += dk * lp.wk.transpose();
    dx.noalias() += dv * lp.wv.transpose();
    return dx;
}

}  // namespace

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

double gelu_derivative(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
    const double pdf = std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
    return cdf + x * pdf;
}

void EncoderConfig::validate() const {
    if (hidden == 0 || heads == 0 || layers == 0 || max_len == 0 || out_dim == 0) {
        throw Error("encoder dimensions must be positive");
    }
    if (hidden % heads != 0) throw Error("hidden size must be divisible by the head count");
}

EncoderParams EncoderParams::zeros_like() const {
    EncoderParams z = *this;
    z.set_zero();
    return z;
}

void EncoderParams::set_zero() {
    token_embeddings.setZero();
    positional_embeddings.setZero();
    for (auto& l : layers) {
        for (Matrix* m : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.w2}) m->setZero();
        for (Vector* v : {&l.bq, &l.bk, &l.bv, &l.bo, &l.ln1_gain, &l.ln1_bias, &l.b1, &l.b2,
                          &l.ln2_gain, &l.ln2_bias}) {
            v->setZero();
        }
    }
    projection.setZero();
    projection_bias.setZero();
}

void EncoderParams::append_author_rows(std::size_t count) {
    const Index old_rows = token_embeddings.rows();
    Matrix grown(old_rows + idx(count), token_embeddings.cols());
    grown.topRows(old_rows) = token_embeddings;
    for (Index r = old_rows; r < grown.rows(); ++r) {
        grown.row(r) = token_embeddings.row(idx(Vocabulary::kClsBase));
    }
    token_embeddings = std::move(grown);
}

std::size_t parameter_count(const EncoderParams& p) {
    auto n = static_cast<std::size_t>(p.token_embeddings.size() + p.positional_embeddings.size() +
                                      p.projection.size() + p.projection_bias.size());
    for (const auto& l : p.layers) {
        for (const Matrix* m : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1, &l.w2}) n += static_cast<std::size_t>(m->size());
        for (const Vector* v : {&l.bq, &l.bk, &l.bv, &l.bo, &l.ln1_gain, &l.ln1_bias, &l.b1, &l.b2,
                                &l.ln2_gain, &l.ln2_bias}) {
            n += static_cast<std::size_t>(v->size());
        }
    }
    return n;
}

EncoderParams init_encoder(const EncoderConfig& config, const Vocabulary& vocab, std::uint64_t seed) {
    config.validate();
    std::mt19937_64 rng(seed);
    const Index h = idx(config.hidden);
    const Index f = idx(config.ffn_width());
    const double sd = config.init_std;

    EncoderParams p;
    p.config = config;
    p.token_embeddings.resize(idx(vocab.rows()), h);
    p.token_embeddings.setZero();
    {
        Matrix words(idx(vocab.author_cls_offset()), h);
        fill_normal(words, rng, sd);
        p.token_embeddings.topRows(words.rows()) = words;
    }
    for (Index r = idx(vocab.author_cls_offset()); r < p.token_embeddings.rows(); ++r) {
        p.token_embeddings.row(r) = p.token_embeddings.row(idx(Vocabulary::kClsBase));
    }
    p.positional_embeddings.resize(idx(config.max_len), h);
    fill_normal(p.positional_embeddings, rng, sd);

    for (std::size_t b = 0; b < config.layers; ++b) {
        LayerParams l;
        for (Matrix* m : {&l.wq, &l.wk, &l.wv, &l.wo}) {
            m->resize(h, h);
            fill_normal(*m, rng, sd);
        }
        l.w1.resize(h, f);
        fill_normal(l.w1, rng, sd);
        l.w2.resize(f, h);
        fill_normal(l.w2, rng, sd);
        for (Vector* v : {&l.bq, &l.bk, &l.bv, &l.bo, &l.ln1_bias, &l.b2, &l.ln2_bias}) {
            *v = Vector::Zero(h);
        }
        l.b1 = Vector::Zero(f);
        l.ln1_gain = Vector::Ones(h);
        l.ln2_gain = Vector::Ones(h);
        p.layers.push_back(std::move(l));
    }
    if (config.hidden != config.out_dim) {
        p.projection.resize(h, idx(config.out_dim));
        fill_normal(p.projection, rng, sd);
        p.projection_bias = Vector::Zero(idx(config.out_dim));
    }
    return p;
}

EncoderGradients::EncoderGradients(const EncoderParams& like)
    : d(like.zeros_like()), touched_rows(static_cast<std::size_t>(like.token_embeddings.rows()), 0) {}

void EncoderGradients::set_zero() {
    d.set_zero();
    std::fill(touched_rows.begin(), touched_rows.end(), 0);
}

EncoderGradients& EncoderGradients::operator+=(const EncoderGradients& o) {
    d.token_embeddings += o.d.token_embeddings;
    d.positional_embeddings += o.d.positional_embeddings;
    for (std::size_t b = 0; b < d.layers.size(); ++b) {
        auto& l = d.layers[b];
        const auto& r = o.d.layers[b];
        l.wq += r.wq; l.wk += r.wk; l.wv += r.wv; l.wo += r.wo;
        l.bq += r.bq; l.bk += r.bk; l.bv += r.bv; l.bo += r.bo;
        l.ln1_gain += r.ln1_gain; l.ln1_bias += r.ln1_bias;
        l.w1 += r.w1; l.b1 += r.b1; l.w2 += r.w2; l.b2 += r.b2;
        l.ln2_gain += r.ln2_gain; l.ln2_bias += r.ln2_bias;
    }
    if (d.has_projection()) {
        d.projection += o.d.projection;
        d.projection_bias += o.d.projection_bias;
    }
    for (std::size_t i = 0; i < touched_rows.size(); ++i) touched_rows[i] |= o.touched_rows[i];
    return *this;
}

Vector encode(const EncoderParams& p, const TokenSequence& seq, EncodeCache* cache) {
    const auto& cfg = p.config;
    if (seq.ids.empty()) throw Error("encode: empty token sequence");
    if (seq.ids.size() > cfg.max_len) throw Error("encode: sequence longer than max_len");
    if (seq.attention_mask.size() != seq.ids.size()) throw Error("encode: mask length mismatch");
    const Index len = idx(seq.ids.size());
    Matrix x(len, idx(cfg.hidden));
    for (Index t = 0; t < len; ++t) {
        const auto id = seq.ids[static_cast<std::size_t>(t)];
        if (id >= static_cast<std::size_t>(p.token_embeddings.rows())) {
            throw Error("encode: token id " + std::to_string(id) + " out of range");
        }
        x.row(t) = p.token_embeddings.row(idx(id)) + p.positional_embeddings.row(t);
    }

    std::vector<LayerCache> caches;
    caches.reserve(p.layers.size());
    for (std::size_t b = 0; b < p.layers.size(); ++b) {
        const bool last = b + 1 == p.layers.size();
        caches.push_back(layer_forward(p.layers[b], cfg, x, seq.attention_mask, last ? 1 : len));
        x = layer_output(p.layers[b], caches.back());
    }
    Vector cls = x.row(0).transpose();
    Vector out = p.has_projection() ? Vector(p.projection.transpose() * cls + p.projection_bias) : cls;
    if (cache) {
        cache->ids = seq.ids;
        cache->layers = std::move(caches);
        cache->cls_hidden = std::move(cls);
    }
    return out;
}

void encode_backward(const EncoderParams& p, const EncodeCache& cache, const Vector& upstream,
                     EncoderGradients& grads) {
    auto& g = grads.d;
    Vector dcls;
    if (p.has_projection()) {
        g.projection.noalias() += cache.cls_hidden * upstream.transpose();
        g.projection_bias += upstream;
        dcls = p.projection * upstream;
    } else {
        dcls = upstream;
    }
    Matrix dy = dcls.transpose();
    for (std::size_t b = p.layers.size(); b-- > 0;) {
        dy = layer_backward(p.layers[b], p.config, cache.layers[b], dy, g.layers[b]);
    }
    for (std::size_t t = 0; t < cache.ids.size(); ++t) {
        const auto row = cache.ids[t];
        g.token_embeddings.row(idx(row)) += dy.row(idx(t));
        g.positional_embeddings.row(idx(t)) += dy.row(idx(t));
        grads.touched_rows[row] = 1;
    }
}

}  // namespace lg4av::encoder
