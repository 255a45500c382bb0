#include "intentgraph/encoder.hpp"

#include <cmath>
#include <stdexcept>

namespace ig {

namespace {

constexpr double kLnEps = 1e-8;

void init_mat(Mat& m, size_t r, size_t c, Rng& rng, double scale) {
    m = Mat(r, c);
    if (scale != 0.0)
        for (double& v : m.a) v = scale * rng.next_gaussian();
}

// Scales kept entries by 1/(1-p) so expectations match eval mode.
void apply_dropout(Mat& m, double p, Rng& rng, std::vector<uint8_t>& mask) {
    mask.assign(m.a.size(), 1);
    double keep = 1.0 - p;
    for (size_t i = 0; i < m.a.size(); ++i) {
        if (rng.next_double() < p) {
            mask[i] = 0;
            m.a[i] = 0.0;
        } else {
            m.a[i] /= keep;
        }
    }
}

void dropout_backward(Mat& d, double p, const std::vector<uint8_t>& mask) {
    if (mask.empty()) return;
    double keep = 1.0 - p;
    for (size_t i = 0; i < d.a.size(); ++i) d.a[i] = mask[i] ? d.a[i] / keep : 0.0;
}

Mat layer_norm(const Mat& x, const Vec& gamma, const Vec& beta, LnTape& tape) {
    size_t d = x.cols;
    Mat y(x.rows, d);
    tape.xhat = Mat(x.rows, d);
    tape.inv_std.assign(x.rows, 0.0);
    for (size_t r = 0; r < x.rows; ++r) {
        const double* xr = x.row(r);
        double mu = 0.0;
        for (size_t j = 0; j < d; ++j) mu += xr[j];
        mu /= static_cast<double>(d);
        double var = 0.0;
        for (size_t j = 0; j < d; ++j) var += (xr[j] - mu) * (xr[j] - mu);
        var /= static_cast<double>(d);
        double inv = 1.0 / std::sqrt(var + kLnEps);
        tape.inv_std[r] = inv;
        for (size_t j = 0; j < d; ++j) {
            double xh = (xr[j] - mu) * inv;
            tape.xhat(r, j) = xh;
            y(r, j) = gamma[j] * xh + beta[j];
        }
    }
    return y;
}

Mat layer_norm_backward(const Mat& dy, const LnTape& tape, const Vec& gamma, Vec& dgamma,
                        Vec& dbeta) {
    size_t d = dy.cols;
    Mat dx(dy.rows, d);
    for (size_t r = 0; r < dy.rows; ++r) {
        double m1 = 0.0, m2 = 0.0;
        for (size_t j = 0; j < d; ++j) {
            double g = dy(r, j) * gamma[j];
            m1 += g;
            m2 += g * tape.xhat(r, j);
            dgamma[j] += dy(r, j) * tape.xhat(r, j);
            dbeta[j] += dy(r, j);
        }
        m1 /= static_cast<double>(d);
        m2 /= static_cast<double>(d);
        double inv = tape.inv_std[r];
        for (size_t j = 0; j < d; ++j)
            dx(r, j) = inv * (dy(r, j) * gamma[j] - m1 - tape.xhat(r, j) * m2);
    }
    return dx;
}

void add_bias(Mat& m, const Vec& b) {
    for (size_t r = 0; r < m.rows; ++r) {
        double* mr = m.row(r);
        for (size_t j = 0; j < m.cols; ++j) mr[j] += b[j];
    }
}

void bias_grad(const Mat& d, Vec& db) {
    for (size_t r = 0; r < d.rows; ++r)
        for (size_t j = 0; j < d.cols; ++j) db[j] += d(r, j);
}

nlohmann::ordered_json mat_json(const Mat& m) {
    nlohmann::ordered_json j;
    j["rows"] = m.rows;
    j["cols"] = m.cols;
    j["data"] = m.a;
    return j;
}

Mat mat_from_json(const nlohmann::json& j) {
    Mat m(j.at("rows").get<size_t>(), j.at("cols").get<size_t>());
    m.a = j.at("data").get<std::vector<double>>();
    if (m.a.size() != m.rows * m.cols)
        throw std::runtime_error("matrix payload size does not match its dims");
    return m;
}

}  // namespace

AttnEncoder::AttnEncoder(const AttnConfig& cfg, Rng& rng, double init_scale) : cfg_(cfg) {
    if (cfg.dim <= 0 || cfg.heads <= 0 || cfg.blocks <= 0 || cfg.max_len <= 0)
        throw std::invalid_argument("encoder dims must be positive");
    if (cfg.dim % cfg.heads != 0)
        throw std::invalid_argument("encoder dim must be divisible by heads");
    if (cfg.dropout < 0.0 || cfg.dropout >= 1.0)
        throw std::invalid_argument("dropout must be in [0, 1)");
    size_t d = static_cast<size_t>(cfg.dim);
    init_mat(pos_, static_cast<size_t>(cfg.max_len), d, rng, init_scale);
    blocks_.resize(static_cast<size_t>(cfg.blocks));
    for (auto& b : blocks_) {
        init_mat(b.wq, d, d, rng, init_scale);
        init_mat(b.wk, d, d, rng, init_scale);
        init_mat(b.wv, d, d, rng, init_scale);
        init_mat(b.w1, d, d, rng, init_scale);
        init_mat(b.w2, d, d, rng, init_scale);
        b.b1.assign(d, 0.0);
        b.b2.assign(d, 0.0);
        b.ln1_g.assign(d, 1.0);
        b.ln1_b.assign(d, 0.0);
        b.ln2_g.assign(d, 1.0);
        b.ln2_b.assign(d, 0.0);
    }
}

Mat AttnEncoder::forward(const Mat& input, EncoderTape* tape, Rng* dropout_rng) const {
    size_t L = input.rows;
    size_t d = static_cast<size_t>(cfg_.dim);
    if (L == 0) throw std::invalid_argument("cannot encode an empty sequence");
    if (L > static_cast<size_t>(cfg_.max_len))
        throw std::invalid_argument("sequence longer than max_len; truncate first");
    check_shapes(input.cols, d, "encoder input");

    bool dropping = dropout_rng != nullptr && cfg_.dropout > 0.0;
    EncoderTape local;
    EncoderTape& tp = tape ? *tape : local;
    tp.blocks.assign(blocks_.size(), BlockTape{});

    Mat x = input;
    for (size_t t = 0; t < L; ++t)
        for (size_t j = 0; j < d; ++j) x(t, j) += pos_(t, j);
    if (dropping) apply_dropout(x, cfg_.dropout, *dropout_rng, tp.in_mask);
    tp.x0 = x;

    size_t nh = static_cast<size_t>(cfg_.heads);
    size_t dh = d / nh;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    for (size_t b = 0; b < blocks_.size(); ++b) {
        const AttnBlockParams& p = blocks_[b];
        BlockTape& bt = tp.blocks[b];
        bt.x = x;
        bt.q = matmul(x, p.wq);
        bt.k = matmul(x, p.wk);
        bt.v = matmul(x, p.wv);
        bt.attn.assign(nh, Mat(L, L));
        bt.ctx = Mat(L, d);
        for (size_t h = 0; h < nh; ++h) {
            size_t off = h * dh;
            Mat& a = bt.attn[h];
            for (size_t i = 0; i < L; ++i) {
                // Causal: row i attends to positions 0..i only.
                double mx = -1e300;
                std::vector<double> s(i + 1);
                for (size_t j = 0; j <= i; ++j) {
                    double v = 0.0;
                    for (size_t c = 0; c < dh; ++c) v += bt.q(i, off + c) * bt.k(j, off + c);
                    s[j] = v * inv_sqrt;
                    mx = std::max(mx, s[j]);
                }
                double z = 0.0;
                for (size_t j = 0; j <= i; ++j) {
                    s[j] = std::exp(s[j] - mx);
                    z += s[j];
                }
                for (size_t j = 0; j <= i; ++j) {
                    double w = s[j] / z;
                    a(i, j) = w;
                    for (size_t c = 0; c < dh; ++c) bt.ctx(i, off + c) += w * bt.v(j, off + c);
                }
            }
        }
        Mat ctx = bt.ctx;
        if (dropping) apply_dropout(ctx, cfg_.dropout, *dropout_rng, bt.ctx_mask);
        bt.r1 = x;
        for (size_t i = 0; i < L * d; ++i) bt.r1.a[i] += ctx.a[i];
        bt.h1 = layer_norm(bt.r1, p.ln1_g, p.ln1_b, bt.ln1);

        bt.fpre = matmul(bt.h1, p.w1);
        add_bias(bt.fpre, p.b1);
        bt.frelu = bt.fpre;
        for (double& v : bt.frelu.a) v = v > 0.0 ? v : 0.0;
        bt.ffn = matmul(bt.frelu, p.w2);
        add_bias(bt.ffn, p.b2);
        Mat ffn = bt.ffn;
        if (dropping) apply_dropout(ffn, cfg_.dropout, *dropout_rng, bt.ffn_mask);
        bt.r2 = bt.h1;
        for (size_t i = 0; i < L * d; ++i) bt.r2.a[i] += ffn.a[i];
        x = layer_norm(bt.r2, p.ln2_g, p.ln2_b, bt.ln2);
    }
    tp.out = x;
    return x;
}

Vec AttnEncoder::encode(const Mat& input) const {
    Mat h = forward(input);
    return Vec(h.row(h.rows - 1), h.row(h.rows - 1) + h.cols);
}

void AttnEncoder::backward(const EncoderTape& tape, const Mat& d_out, AttnEncoder& grads,
                           Mat* d_input) const {
    size_t L = tape.x0.rows;
    size_t d = static_cast<size_t>(cfg_.dim);
    size_t nh = static_cast<size_t>(cfg_.heads);
    size_t dh = d / nh;
    double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(dh));

    Mat dx = d_out;
    for (size_t bi = blocks_.size(); bi-- > 0;) {
        const AttnBlockParams& p = blocks_[bi];
        const BlockTape& bt = tape.blocks[bi];
        AttnBlockParams& gp = grads.blocks_[bi];

        Mat dr2 = layer_norm_backward(dx, bt.ln2, p.ln2_g, gp.ln2_g, gp.ln2_b);
        Mat dh1 = dr2;
        Mat dffn = dr2;
        dropout_backward(dffn, cfg_.dropout, bt.ffn_mask);

        matmul_tn_acc(bt.frelu, dffn, gp.w2);
        bias_grad(dffn, gp.b2);
        Mat dfrelu = matmul_nt(dffn, p.w2);
        for (size_t i = 0; i < L * d; ++i)
            if (bt.fpre.a[i] <= 0.0) dfrelu.a[i] = 0.0;
        matmul_tn_acc(bt.h1, dfrelu, gp.w1);
        bias_grad(dfrelu, gp.b1);
        matmul_nt_acc(dfrelu, p.w1, dh1);

        Mat dr1 = layer_norm_backward(dh1, bt.ln1, p.ln1_g, gp.ln1_g, gp.ln1_b);
        Mat dxb = dr1;
        Mat dctx = dr1;
        dropout_backward(dctx, cfg_.dropout, bt.ctx_mask);

        Mat dq(L, d), dk(L, d), dv(L, d);
        for (size_t h = 0; h < nh; ++h) {
            size_t off = h * dh;
            const Mat& a = bt.attn[h];
            for (size_t i = 0; i < L; ++i) {
                std::vector<double> da(i + 1), ds(i + 1);
                double asum = 0.0;
                for (size_t j = 0; j <= i; ++j) {
                    double v = 0.0;
                    for (size_t c = 0; c < dh; ++c) v += dctx(i, off + c) * bt.v(j, off + c);
                    da[j] = v;
                    asum += a(i, j) * v;
                    for (size_t c = 0; c < dh; ++c) dv(j, off + c) += a(i, j) * dctx(i, off + c);
                }
                for (size_t j = 0; j <= i; ++j) {
                    ds[j] = a(i, j) * (da[j] - asum) * inv_sqrt;
                    for (size_t c = 0; c < dh; ++c) {
                        dq(i, off + c) += ds[j] * bt.k(j, off + c);
                        dk(j, off + c) += ds[j] * bt.q(i, off + c);
                    }
                }
            }
        }
        matmul_tn_acc(bt.x, dq, gp.wq);
        matmul_tn_acc(bt.x, dk, gp.wk);
        matmul_tn_acc(bt.x, dv, gp.wv);
        matmul_nt_acc(dq, p.wq, dxb);
        matmul_nt_acc(dk, p.wk, dxb);
        matmul_nt_acc(dv, p.wv, dxb);
        dx = dxb;
    }
    dropout_backward(dx, cfg_.dropout, tape.in_mask);
    for (size_t t = 0; t < L; ++t)
        for (size_t j = 0; j < d; ++j) grads.pos_(t, j) += dx(t, j);
    if (d_input) *d_input = dx;
}

AttnEncoder AttnEncoder::zeros_like() const {
    AttnEncoder z = *this;
    z.zero();
    return z;
}

void AttnEncoder::zero() {
    pos_.fill(0.0);
    for (auto& b : blocks_) {
        b.wq.fill(0.0);
        b.wk.fill(0.0);
        b.wv.fill(0.0);
        b.w1.fill(0.0);
        b.w2.fill(0.0);
        b.b1.assign(b.b1.size(), 0.0);
        b.b2.assign(b.b2.size(), 0.0);
        b.ln1_g.assign(b.ln1_g.size(), 0.0);
        b.ln1_b.assign(b.ln1_b.size(), 0.0);
        b.ln2_g.assign(b.ln2_g.size(), 0.0);
        b.ln2_b.assign(b.ln2_b.size(), 0.0);
    }
}

void AttnEncoder::add_scaled(const AttnEncoder& other, double factor) {
    auto self = param_groups();
    auto that = const_cast<AttnEncoder&>(other).param_groups();
    for (size_t g = 0; g < self.size(); ++g)
        for (size_t i = 0; i < self[g].second->size(); ++i)
            (*self[g].second)[i] += factor * (*that[g].second)[i];
}

std::vector<std::pair<std::string, std::vector<double>*>> AttnEncoder::param_groups() {
    std::vector<std::pair<std::string, std::vector<double>*>> out;
    out.emplace_back("positional", &pos_.a);
    for (size_t b = 0; b < blocks_.size(); ++b) {
        std::string pre = "block" + std::to_string(b) + ".";
        out.emplace_back(pre + "wq", &blocks_[b].wq.a);
        out.emplace_back(pre + "wk", &blocks_[b].wk.a);
        out.emplace_back(pre + "wv", &blocks_[b].wv.a);
        out.emplace_back(pre + "w1", &blocks_[b].w1.a);
        out.emplace_back(pre + "b1", &blocks_[b].b1);
        out.emplace_back(pre + "w2", &blocks_[b].w2.a);
        out.emplace_back(pre + "b2", &blocks_[b].b2);
        out.emplace_back(pre + "ln1_g", &blocks_[b].ln1_g);
        out.emplace_back(pre + "ln1_b", &blocks_[b].ln1_b);
        out.emplace_back(pre + "ln2_g", &blocks_[b].ln2_g);
        out.emplace_back(pre + "ln2_b", &blocks_[b].ln2_b);
    }
    return out;
}

nlohmann::ordered_json AttnEncoder::to_json() const {
    nlohmann::ordered_json j;
    j["dim"] = cfg_.dim;
    j["heads"] = cfg_.heads;
    j["blocks"] = cfg_.blocks;
    j["max_len"] = cfg_.max_len;
    j["dropout"] = cfg_.dropout;
    j["positional"] = mat_json(pos_);
    j["params"] = nlohmann::ordered_json::array();
    for (const auto& b : blocks_) {
        nlohmann::ordered_json bj;
        bj["wq"] = mat_json(b.wq);
        bj["wk"] = mat_json(b.wk);
        bj["wv"] = mat_json(b.wv);
        bj["w1"] = mat_json(b.w1);
        bj["b1"] = b.b1;
        bj["w2"] = mat_json(b.w2);
        bj["b2"] = b.b2;
        bj["ln1_g"] = b.ln1_g;
        bj["ln1_b"] = b.ln1_b;
        bj["ln2_g"] = b.ln2_g;
        bj["ln2_b"] = b.ln2_b;
        j["params"].push_back(std::move(bj));
    }
    return j;
}

AttnEncoder AttnEncoder::from_json(const nlohmann::json& j) {
    AttnEncoder e;
    e.cfg_.dim = j.at("dim").get<int>();
    e.cfg_.heads = j.at("heads").get<int>();
    e.cfg_.blocks = j.at("blocks").get<int>();
    e.cfg_.max_len = j.at("max_len").get<int>();
    e.cfg_.dropout = j.at("dropout").get<double>();
    e.pos_ = mat_from_json(j.at("positional"));
    for (const auto& bj : j.at("params")) {
        AttnBlockParams b;
        b.wq = mat_from_json(bj.at("wq"));
        b.wk = mat_from_json(bj.at("wk"));
        b.wv = mat_from_json(bj.at("wv"));
        b.w1 = mat_from_json(bj.at("w1"));
        b.b1 = bj.at("b1").get<Vec>();
        b.w2 = mat_from_json(bj.at("w2"));
        b.b2 = bj.at("b2").get<Vec>();
        b.ln1_g = bj.at("ln1_g").get<Vec>();
        b.ln1_b = bj.at("ln1_b").get<Vec>();
        b.ln2_g = bj.at("ln2_g").get<Vec>();
        b.ln2_b = bj.at("ln2_b").get<Vec>();
        e.blocks_.push_back(std::move(b));
    }
    if (e.blocks_.size() != static_cast<size_t>(e.cfg_.blocks))
        throw std::runtime_error("encoder block count does not match its config");
    return e;
}

}  // namespace ig
