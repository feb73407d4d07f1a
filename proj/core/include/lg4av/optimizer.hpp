#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "lg4av/encoder.hpp"

namespace lg4av {

enum class ParamKind { embedding, attention, feed_forward, layer_norm, projection, head };

std::string to_string(ParamKind k);

/// One trainable tensor paired with its gradient buffer.
struct ParamSlot {
    std::string name;
    ParamKind kind = ParamKind::embedding;
    double* value = nullptr;
    const double* grad = nullptr;
    std::size_t size = 0;
    bool decay = true;
    /// Row-sparse tensors update only rows flagged here (row width = size / flags).
    const std::vector<unsigned char>* touched_rows = nullptr;
};

/// Slots for every encoder tensor, in a fixed order. `grads` may be null for read-only listing.
std::vector<ParamSlot> encoder_slots(encoder::EncoderParams& p, encoder::EncoderGradients* grads);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
};

/// Adam with decoupled weight decay. Slots must be passed in the same order on every step.
/// Row-sparse slots keep untouched rows (and their moments) exactly as they were.
class AdamW {
public:
    explicit AdamW(AdamConfig cfg = {}) : cfg_(cfg) {}

    void step(std::span<const ParamSlot> slots, double lr);
    long steps() const noexcept { return step_; }

private:
    AdamConfig cfg_;
    long step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

/// lr_t = base * (total - t) / total for t = 0 .. total-1; no warm-up.
class LinearDecay {
public:
    LinearDecay(double base_lr, long total_steps);
    double at(long step) const;
    long total() const noexcept { return total_; }

private:
    double base_;
    long total_;
};

}  // namespace lg4av
