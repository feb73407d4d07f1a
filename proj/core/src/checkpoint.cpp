#include "lg4av/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "lg4av/error.hpp"

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace lg4av::checkpoint {

namespace {

class Writer {
public:
    explicit Writer(std::ostream& out) : out_(out) {}
    void raw(const void* p, std::size_t n) { out_.write(static_cast<const char*>(p), static_cast<std::streamsize>(n)); }
    void u32(std::uint32_t v) { raw(&v, sizeof v); }
    void u64(std::uint64_t v) { raw(&v, sizeof v); }
    void i64(std::int64_t v) { raw(&v, sizeof v); }
    void f64(double v) { raw(&v, sizeof v); }
    void str(const std::string& s) {
        u64(s.size());
        raw(s.data(), s.size());
    }
    void doubles(const double* p, std::size_t n) {
        u64(n);
        raw(p, n * sizeof(double));
    }
    void matrix(const Matrix& m) {
        u64(static_cast<std::uint64_t>(m.rows()));
        u64(static_cast<std::uint64_t>(m.cols()));
        raw(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
    }

private:
    std::ostream& out_;
};

class Reader {
public:
    explicit Reader(std::istream& in) : in_(in) {}
    void raw(void* p, std::size_t n) {
        in_.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
        if (!in_) throw Error("checkpoint: unexpected end of data");
    }
    std::uint32_t u32() { std::uint32_t v; raw(&v, sizeof v); return v; }
    std::uint64_t u64() { std::uint64_t v; raw(&v, sizeof v); return v; }
    std::int64_t i64() { std::int64_t v; raw(&v, sizeof v); return v; }
    double f64() { double v; raw(&v, sizeof v); return v; }
    std::string str() {
        std::string s(checked(u64()), '\0');
        raw(s.data(), s.size());
        return s;
    }
    void doubles_into(double* p, std::size_t expected, const std::string& what) {
        if (u64() != expected) throw Error("checkpoint: size mismatch for " + what);
        raw(p, expected * sizeof(double));
    }
    Matrix matrix() {
        const auto r = checked(u64());
        const auto c = checked(u64());
        Matrix m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c));
        raw(m.data(), r * c * sizeof(double));
        return m;
    }

private:
    static std::size_t checked(std::uint64_t n) {
        if (n > (std::uint64_t{1} << 34)) throw Error("checkpoint: implausible length field");
        return static_cast<std::size_t>(n);
    }
    std::istream& in_;
};

void write_config(Writer& w, const encoder::EncoderConfig& c) {
    w.u64(c.hidden);
    w.u64(c.heads);
    w.u64(c.layers);
    w.u64(c.ffn);
    w.u64(c.max_len);
    w.u64(c.out_dim);
    w.f64(c.ln_eps);
    w.f64(c.init_std);
}

encoder::EncoderConfig read_config(Reader& r) {
    encoder::EncoderConfig c;
    c.hidden = r.u64();
    c.heads = r.u64();
    c.layers = r.u64();
    c.ffn = r.u64();
    c.max_len = r.u64();
    c.out_dim = r.u64();
    c.ln_eps = r.f64();
    c.init_std = r.f64();
    c.validate();
    return c;
}

// Shapes implied by the configuration and vocabulary; values are overwritten on load.
encoder::EncoderParams shaped_params(const encoder::EncoderConfig& cfg, std::size_t vocab_rows) {
    using Eigen::Index;
    const auto h = static_cast<Index>(cfg.hidden);
    const auto f = static_cast<Index>(cfg.ffn_width());
    encoder::EncoderParams p;
    p.config = cfg;
    p.token_embeddings = Matrix::Zero(static_cast<Index>(vocab_rows), h);
    p.positional_embeddings = Matrix::Zero(static_cast<Index>(cfg.max_len), h);
    for (std::size_t b = 0; b < cfg.layers; ++b) {
        encoder::LayerParams l;
        l.wq = l.wk = l.wv = l.wo = Matrix::Zero(h, h);
        l.bq = l.bk = l.bv = l.bo = l.ln1_gain = l.ln1_bias = l.b2 = l.ln2_gain = l.ln2_bias = Vector::Zero(h);
        l.w1 = Matrix::Zero(h, f);
        l.b1 = Vector::Zero(f);
        l.w2 = Matrix::Zero(f, h);
        p.layers.push_back(std::move(l));
    }
    if (cfg.hidden != cfg.out_dim) {
        p.projection = Matrix::Zero(h, static_cast<Index>(cfg.out_dim));
        p.projection_bias = Vector::Zero(static_cast<Index>(cfg.out_dim));
    }
    return p;
}

}  // namespace

void save(std::ostream& out, const model::Lg4avModel& m) {
    Writer w(out);
    w.raw(kMagic, sizeof kMagic);
    w.u32(kVersion);
    w.str(model::to_string(m.variant()));
    w.i64(m.k());
    w.u64(m.old_author_count());
    write_config(w, m.encoder().config);

    const auto& tokens = m.vocab().tokens();
    w.u64(tokens.size() - 3);
    for (std::size_t i = 3; i < tokens.size(); ++i) w.str(tokens[i]);
    w.u64(m.authors().size());
    for (const auto& a : m.authors()) w.str(a);

    auto enc = m.encoder();
    const auto slots = encoder_slots(enc, nullptr);
    w.u64(slots.size());
    for (const auto& s : slots) {
        w.str(s.name);
        w.doubles(s.value, s.size);
    }
    w.doubles(m.head_weights().data(), static_cast<std::size_t>(m.head_weights().size()));
    w.f64(m.head_bias());
    w.u64(m.features().matrices.size());
    for (const auto& x : m.features().matrices) w.matrix(x);
    if (!out) throw Error("checkpoint: write failed");
}

model::Lg4avModel load(std::istream& in) {
    Reader r(in);
    char magic[sizeof kMagic];
    r.raw(magic, sizeof magic);
    if (std::memcmp(magic, kMagic, sizeof kMagic) != 0) throw Error("checkpoint: bad magic");
    if (const auto v = r.u32(); v != kVersion) {
        throw Error("checkpoint: unsupported version " + std::to_string(v));
    }
    const auto variant = model::variant_from_string(r.str());
    const auto k = r.i64();
    const auto old_count = r.u64();
    const auto cfg = read_config(r);

    std::vector<std::string> words(r.u64());
    for (auto& t : words) t = r.str();
    std::vector<std::string> authors(r.u64());
    for (auto& a : authors) a = r.str();
    encoder::Vocabulary vocab(std::move(words), std::move(authors));

    auto params = shaped_params(cfg, vocab.rows());
    auto slots = encoder_slots(params, nullptr);
    if (r.u64() != slots.size()) throw Error("checkpoint: tensor count mismatch");
    for (auto& s : slots) {
        if (r.str() != s.name) throw Error("checkpoint: unexpected tensor order at " + s.name);
        r.doubles_into(s.value, s.size, s.name);
    }
    const auto head_size = cfg.out_dim * static_cast<std::size_t>(k + 1);
    Vector head(static_cast<Eigen::Index>(head_size));
    r.doubles_into(head.data(), head_size, "head_weights");
    const double bias = r.f64();

    graph::PropagatedFeatures features;
    features.k = static_cast<int>(k);
    features.matrices.resize(r.u64());
    for (auto& x : features.matrices) x = r.matrix();

    model::Lg4avModel m(std::move(vocab), std::move(params), std::move(features), variant);
    m.head_weights() = head;
    m.head_bias() = bias;
    m.set_old_author_count(static_cast<std::size_t>(old_count));
    return m;
}

void save(const std::filesystem::path& path, const model::Lg4avModel& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write checkpoint " + path.string());
    save(out, m);
}

model::Lg4avModel load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open checkpoint " + path.string());
    return load(in);
}

}  // namespace lg4av::checkpoint
