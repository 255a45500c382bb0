#pragma once
// Causally masked self-attention sequence encoder shared by the recommender
// and the session-intention ranking trainer.
//
// Layout per block, post-norm: h1 = LN1(x + Attn(x)), out = LN2(h1 + FFN(h1)).
// Attention uses bias-free query/key/value projections and no output
// projection; the feed-forward is two affine layers (width = model dim) with
// a rectifier. Learned positional embeddings are added to the input sequence
// and dropout, when enabled, is applied to the embedded input and to each
// sublayer output before its residual add.

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "intentgraph/mat.hpp"
#include "intentgraph/rng.hpp"
#include "json.hpp"

namespace ig {

struct AttnConfig {
    int dim = 64;
    int heads = 1;
    int blocks = 1;
    int max_len = 50;
    double dropout = 0.0;

    bool operator==(const AttnConfig&) const = default;
};

struct AttnBlockParams {
    Mat wq, wk, wv;  // dim x dim
    Mat w1, w2;      // dim x dim feed-forward
    Vec b1, b2;
    Vec ln1_g, ln1_b;
    Vec ln2_g, ln2_b;

    bool operator==(const AttnBlockParams&) const = default;
};

struct LnTape {
    Mat xhat;
    Vec inv_std;
};

struct BlockTape {
    Mat x;
    Mat q, k, v;
    std::vector<Mat> attn;  // per head, rows are prefix softmaxes
    Mat ctx;
    std::vector<uint8_t> ctx_mask;
    Mat r1, h1;
    LnTape ln1;
    Mat fpre, frelu, ffn;
    std::vector<uint8_t> ffn_mask;
    Mat r2;
    LnTape ln2;
};

struct EncoderTape {
    Mat x0;
    std::vector<uint8_t> in_mask;
    std::vector<BlockTape> blocks;
    Mat out;
};

class AttnEncoder {
public:
    AttnEncoder() = default;
    // init_scale 0 gives zero attention/feed-forward weights (normalization
    // parameters always start at identity).
    AttnEncoder(const AttnConfig& cfg, Rng& rng, double init_scale = 0.02);

    const AttnConfig& config() const { return cfg_; }
    Mat& positional() { return pos_; }
    const Mat& positional() const { return pos_; }
    std::vector<AttnBlockParams>& blocks() { return blocks_; }
    const std::vector<AttnBlockParams>& blocks() const { return blocks_; }

    // input: L x dim, 1 <= L <= max_len. Returns all L output rows. When
    // dropout_rng is null, dropout is disabled regardless of the config.
    Mat forward(const Mat& input, EncoderTape* tape = nullptr, Rng* dropout_rng = nullptr) const;
    Vec encode(const Mat& input) const;

    // Accumulates into grads (same shapes as *this); d_input, when non-null,
    // receives the gradient wrt the raw input sequence (pre-positional).
    void backward(const EncoderTape& tape, const Mat& d_out, AttnEncoder& grads,
                  Mat* d_input = nullptr) const;

    AttnEncoder zeros_like() const;
    void zero();
    void add_scaled(const AttnEncoder& other, double factor);

    // Named parameter groups ("positional", "block0.wq", ...). Grouping is
    // stable; used by the SGD loop and the finite-difference checks.
    std::vector<std::pair<std::string, std::vector<double>*>> param_groups();

    nlohmann::ordered_json to_json() const;
    static AttnEncoder from_json(const nlohmann::json& j);

    bool operator==(const AttnEncoder&) const = default;

private:
    AttnConfig cfg_;
    Mat pos_;  // max_len x dim
    std::vector<AttnBlockParams> blocks_;
};

}  // namespace ig
