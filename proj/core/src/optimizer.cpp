#include "lg4av/optimizer.hpp"

#include <cmath>

#include "lg4av/error.hpp"

namespace lg4av {

std::string to_string(ParamKind k) {
    switch (k) {
        case ParamKind::embedding: return "embedding";
        case ParamKind::attention: return "attention";
        case ParamKind::feed_forward: return "feed_forward";
        case ParamKind::layer_norm: return "layer_norm";
        case ParamKind::projection: return "projection";
        case ParamKind::head: return "head";
    }
    return "?";
}

namespace {

template <typename T>
void add_slot(std::vector<ParamSlot>& out, std::string name, ParamKind kind, T& value, T* grad,
              bool decay, const std::vector<unsigned char>* rows = nullptr) {
    out.push_back({std::move(name), kind, value.data(), grad ? grad->data() : nullptr,
                   static_cast<std::size_t>(value.size()), decay, rows});
}

}  // namespace

std::vector<ParamSlot> encoder_slots(encoder::EncoderParams& p, encoder::EncoderGradients* grads) {
    std::vector<ParamSlot> s;
    auto* g = grads ? &grads->d : nullptr;
    add_slot(s, "token_embeddings", ParamKind::embedding, p.token_embeddings,
             g ? &g->token_embeddings : nullptr, true, grads ? &grads->touched_rows : nullptr);
    add_slot(s, "positional_embeddings", ParamKind::embedding, p.positional_embeddings,
             g ? &g->positional_embeddings : nullptr, true);
    for (std::size_t b = 0; b < p.layers.size(); ++b) {
        auto& l = p.layers[b];
        auto* gl = g ? &g->layers[b] : nullptr;
        const std::string pre = "layer" + std::to_string(b) + ".";
        add_slot(s, pre + "wq", ParamKind::attention, l.wq, gl ? &gl->wq : nullptr, true);
        add_slot(s, pre + "bq", ParamKind::attention, l.bq, gl ? &gl->bq : nullptr, false);
        add_slot(s, pre + "wk", ParamKind::attention, l.wk, gl ? &gl->wk : nullptr, true);
        add_slot(s, pre + "bk", ParamKind::attention, l.bk, gl ? &gl->bk : nullptr, false);
        add_slot(s, pre + "wv", ParamKind::attention, l.wv, gl ? &gl->wv : nullptr, true);
        add_slot(s, pre + "bv", ParamKind::attention, l.bv, gl ? &gl->bv : nullptr, false);
        add_slot(s, pre + "wo", ParamKind::attention, l.wo, gl ? &gl->wo : nullptr, true);
        add_slot(s, pre + "bo", ParamKind::attention, l.bo, gl ? &gl->bo : nullptr, false);
        add_slot(s, pre + "ln1_gain", ParamKind::layer_norm, l.ln1_gain, gl ? &gl->ln1_gain : nullptr, false);
        add_slot(s, pre + "ln1_bias", ParamKind::layer_norm, l.ln1_bias, gl ? &gl->ln1_bias : nullptr, false);
        add_slot(s, pre + "w1", ParamKind::feed_forward, l.w1, gl ? &gl->w1 : nullptr, true);
        add_slot(s, pre + "b1", ParamKind::feed_forward, l.b1, gl ? &gl->b1 : nullptr, false);
        add_slot(s, pre + "w2", ParamKind::feed_forward, l.w2, gl ? &gl->w2 : nullptr, true);
        add_slot(s, pre + "b2", ParamKind::feed_forward, l.b2, gl ? &gl->b2 : nullptr, false);
        add_slot(s, pre + "ln2_gain", ParamKind::layer_norm, l.ln2_gain, gl ? &gl->ln2_gain : nullptr, false);
        add_slot(s, pre + "ln2_bias", ParamKind::layer_norm, l.ln2_bias, gl ? &gl->ln2_bias : nullptr, false);
    }
    if (p.has_projection()) {
        add_slot(s, "projection", ParamKind::projection, p.projection, g ? &g->projection : nullptr, true);
        add_slot(s, "projection_bias", ParamKind::projection, p.projection_bias,
                 g ? &g->projection_bias : nullptr, false);
    }
    return s;
}

void AdamW::step(std::span<const ParamSlot> slots, double lr) {
    if (m_.empty()) {
        for (const auto& s : slots) {
            m_.emplace_back(s.size, 0.0);
            v_.emplace_back(s.size, 0.0);
        }
    }
    if (m_.size() != slots.size()) throw Error("AdamW: slot layout changed between steps");
    ++step_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

    for (std::size_t si = 0; si < slots.size(); ++si) {
        const auto& s = slots[si];
        if (s.size != m_[si].size()) throw Error("AdamW: slot \"" + s.name + "\" changed size");
        auto& m = m_[si];
        auto& v = v_[si];
        const double decay = s.decay ? cfg_.weight_decay : 0.0;
        auto update = [&](std::size_t begin, std::size_t end) {
            for (std::size_t i = begin; i < end; ++i) {
                const double g = s.grad[i];
                s.value[i] *= 1.0 - lr * decay;
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
                s.value[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + cfg_.eps);
            }
        };
        if (s.touched_rows) {
            const std::size_t rows = s.touched_rows->size();
            const std::size_t width = rows ? s.size / rows : 0;
            for (std::size_t r = 0; r < rows; ++r) {
                if ((*s.touched_rows)[r]) update(r * width, (r + 1) * width);
            }
        } else {
            update(0, s.size);
        }
    }
}

LinearDecay::LinearDecay(double base_lr, long total_steps) : base_(base_lr), total_(total_steps) {
    if (total_steps <= 0) throw Error("LinearDecay: total steps must be positive");
}

double LinearDecay::at(long step) const {
    if (step >= total_) return 0.0;
    return base_ * static_cast<double>(total_ - step) / static_cast<double>(total_);
}

}  // namespace lg4av
