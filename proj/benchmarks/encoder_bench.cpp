#include <benchmark/benchmark.h>

#include <string>

#include "lg4av/encoder.hpp"

using namespace lg4av;
using namespace lg4av::encoder;

namespace {

struct Fixture {
    Vocabulary vocab;
    EncoderParams params;
    TokenSequence seq;

    explicit Fixture(std::size_t len) {
        std::vector<std::string> words;
        for (int i = 0; i < 500; ++i) words.push_back("w" + std::to_string(i));
        vocab = Vocabulary(words, {"a0"});
        params = init_encoder(EncoderConfig{}, vocab, 3);
        std::string body;
        for (std::size_t i = 0; i < len; ++i) body += "w" + std::to_string(i % 500) + " ";
        seq = tokenize(vocab, body, std::string("a0"), params.config.max_len);
    }
};

void BM_EncodeForward(benchmark::State& state) {
    Fixture f(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(encode(f.params, f.seq));
}
BENCHMARK(BM_EncodeForward)->Arg(16)->Arg(64)->Arg(127);

void BM_EncodeBackward(benchmark::State& state) {
    Fixture f(static_cast<std::size_t>(state.range(0)));
    EncodeCache cache;
    const Vector out = encode(f.params, f.seq, &cache);
    const Vector upstream = Vector::Ones(out.size());
    EncoderGradients grads(f.params);
    for (auto _ : state) {
        grads.set_zero();
        encode_backward(f.params, cache, upstream, grads);
        benchmark::ClobberMemory();
    }
}
BENCHMARK(BM_EncodeBackward)->Arg(16)->Arg(64)->Arg(127);

}  // namespace
