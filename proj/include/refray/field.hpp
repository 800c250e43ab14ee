#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refray/rng.hpp"
#include "refray/vec.hpp"

namespace refray {

// Activation outputs of a field query. Colors are sigmoid-clamped to [0, 1],
// density is softplus-clamped to be >= 0, so Eq.-style volume rendering
// preconditions always hold.
struct FieldQueryResult {
    Vec3 rgb{0, 0, 0};
    double sigma = 0.0;
};

namespace act {

template <class T>
T softplus(T x) {
    return x > T(0) ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

template <class T>
T sigmoid(T x) {
    if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
    const T e = std::exp(x);
    return e / (T(1) + e);
}

}  // namespace act

// concat over dims and frequency bands of (sin(2^k pi x), cos(2^k pi x)),
// k = 0..L-1. Output length 2 * L * dim(x).
inline std::vector<double> positional_encoding(const std::vector<double>& x, int L) {
    if (L < 0) throw std::invalid_argument("positional_encoding: L must be >= 0");
    std::vector<double> out;
    out.reserve(x.size() * 2 * static_cast<size_t>(L));
    for (double xi : x) {
        double freq = kPi;
        for (int k = 0; k < L; ++k) {
            out.push_back(std::sin(freq * xi));
            out.push_back(std::cos(freq * xi));
            freq *= 2.0;
        }
    }
    return out;
}

// Flat parameter vector with matching gradient accumulator and Adam moments.
template <class T>
struct ParamStore {
    std::vector<T> params;
    std::vector<T> grads;
    std::vector<T> m;
    std::vector<T> v;
    long long step = 0;

    void init(size_t n, T value = T(0)) {
        params.assign(n, value);
        grads.assign(n, T(0));
        m.assign(n, T(0));
        v.assign(n, T(0));
        step = 0;
    }

    size_t size() const { return params.size(); }
    void zero_grads() { std::fill(grads.begin(), grads.end(), T(0)); }
};

namespace detail {

inline void check_unit_direction(const Vec3& dir) {
    if (std::abs(norm(dir) - 1.0) > 1e-6) throw std::invalid_argument("field query: direction is not unit length");
}

}  // namespace detail

// Dense trilinear voxel field: res^3 lattice vertices, each holding 3 color
// logits and 1 density logit. Logits are interpolated first, activations
// applied after, so a query's gradient support is exactly its 8-vertex cell.
// Color is view-independent; view dependence enters through the bent rays.
template <class T>
class GridField {
public:
    using Scalar = T;

    struct Workspace {
        bool inside = false;
        size_t base[8] = {};
        T w[8] = {};
        double logit[4] = {};
        FieldQueryResult result;
    };

    GridField() = default;
    GridField(int res, const Vec3& bbox_min, const Vec3& bbox_max) : res_(res), lo_(bbox_min), hi_(bbox_max) {
        if (res < 2) throw std::invalid_argument("GridField: resolution must be >= 2");
        if (!(hi_.x > lo_.x && hi_.y > lo_.y && hi_.z > lo_.z))
            throw std::invalid_argument("GridField: bbox_max must exceed bbox_min");
        store_.init(static_cast<size_t>(res) * res * res * 4);
        update_scale();
    }

    int resolution() const { return res_; }
    Vec3 bbox_min() const { return lo_; }
    Vec3 bbox_max() const { return hi_; }
    ParamStore<T>& store() { return store_; }
    const ParamStore<T>& store() const { return store_; }

    size_t vertex_param_index(int ix, int iy, int iz) const {
        return (static_cast<size_t>(ix) + static_cast<size_t>(res_) * (static_cast<size_t>(iy) +
                                                                       static_cast<size_t>(res_) * iz)) *
               4;
    }

    FieldQueryResult forward(const Vec3& pos, Workspace& ws) const {
        ws.inside = pos.x >= lo_.x && pos.x <= hi_.x && pos.y >= lo_.y && pos.y <= hi_.y && pos.z >= lo_.z &&
                    pos.z <= hi_.z;
        if (!ws.inside) {
            ws.result = FieldQueryResult{};
            return ws.result;
        }
        const double gx = (pos.x - lo_.x) * scale_.x;
        const double gy = (pos.y - lo_.y) * scale_.y;
        const double gz = (pos.z - lo_.z) * scale_.z;
        int ix = static_cast<int>(gx);
        int iy = static_cast<int>(gy);
        int iz = static_cast<int>(gz);
        ix = ix > res_ - 2 ? res_ - 2 : ix;
        iy = iy > res_ - 2 ? res_ - 2 : iy;
        iz = iz > res_ - 2 ? res_ - 2 : iz;
        const T fx = static_cast<T>(gx - ix);
        const T fy = static_cast<T>(gy - iy);
        const T fz = static_cast<T>(gz - iz);
        const T gx0 = T(1) - fx, gy0 = T(1) - fy, gz0 = T(1) - fz;

        const size_t v000 = vertex_param_index(ix, iy, iz);
        const size_t stride_y = static_cast<size_t>(res_) * 4;
        const size_t stride_z = static_cast<size_t>(res_) * res_ * 4;
        ws.base[0] = v000;
        ws.base[1] = v000 + 4;
        ws.base[2] = v000 + stride_y;
        ws.base[3] = v000 + stride_y + 4;
        ws.base[4] = v000 + stride_z;
        ws.base[5] = v000 + stride_z + 4;
        ws.base[6] = v000 + stride_z + stride_y;
        ws.base[7] = v000 + stride_z + stride_y + 4;
        ws.w[0] = gx0 * gy0 * gz0;
        ws.w[1] = fx * gy0 * gz0;
        ws.w[2] = gx0 * fy * gz0;
        ws.w[3] = fx * fy * gz0;
        ws.w[4] = gx0 * gy0 * fz;
        ws.w[5] = fx * gy0 * fz;
        ws.w[6] = gx0 * fy * fz;
        ws.w[7] = fx * fy * fz;

        const T* p = store_.params.data();
        T logit[4] = {T(0), T(0), T(0), T(0)};
        for (int c = 0; c < 8; ++c) {
            const T w = ws.w[c];
            const T* vp = p + ws.base[c];
            logit[0] += w * vp[0];
            logit[1] += w * vp[1];
            logit[2] += w * vp[2];
            logit[3] += w * vp[3];
        }
        for (int c = 0; c < 4; ++c) ws.logit[c] = static_cast<double>(logit[c]);
        ws.result.rgb = {act::sigmoid(ws.logit[0]), act::sigmoid(ws.logit[1]), act::sigmoid(ws.logit[2])};
        ws.result.sigma = act::softplus(ws.logit[3]);
        return ws.result;
    }

    // Direction is ignored by the view-independent grid; this overload keeps
    // the field interface uniform for templated callers.
    FieldQueryResult forward(const Vec3& pos, const Vec3&, Workspace& ws) const { return forward(pos, ws); }

    // Accumulates d(loss)/d(params) for the query cached in ws.
    void backward(const Workspace& ws, const Vec3& d_rgb, double d_sigma) {
        if (!ws.inside) return;
        const double s0 = ws.result.rgb.x, s1 = ws.result.rgb.y, s2 = ws.result.rgb.z;
        const T d_logit0 = static_cast<T>(d_rgb.x * s0 * (1.0 - s0));
        const T d_logit1 = static_cast<T>(d_rgb.y * s1 * (1.0 - s1));
        const T d_logit2 = static_cast<T>(d_rgb.z * s2 * (1.0 - s2));
        const T d_logit3 = static_cast<T>(d_sigma * act::sigmoid(ws.logit[3]));  // softplus'
        T* g = store_.grads.data();
        for (int c = 0; c < 8; ++c) {
            const T w = ws.w[c];
            T* vg = g + ws.base[c];
            vg[0] += w * d_logit0;
            vg[1] += w * d_logit1;
            vg[2] += w * d_logit2;
            vg[3] += w * d_logit3;
        }
    }

    FieldQueryResult query(const Vec3& pos, const Vec3& dir) const {
        detail::check_unit_direction(dir);
        Workspace ws;
        return forward(pos, ws);
    }

    void query_with_grad(const Vec3& pos, const Vec3& dir, const Vec3& d_rgb, double d_sigma) {
        detail::check_unit_direction(dir);
        Workspace ws;
        forward(pos, ws);
        backward(ws, d_rgb, d_sigma);
    }

    static constexpr bool uses_direction = false;
    void seed_parameters(uint64_t) {}  // grid logits start at zero

private:
    void update_scale() {
        scale_ = {(res_ - 1) / (hi_.x - lo_.x), (res_ - 1) / (hi_.y - lo_.y), (res_ - 1) / (hi_.z - lo_.z)};
    }

    int res_ = 0;
    Vec3 lo_, hi_;
    Vec3 scale_{1, 1, 1};
    ParamStore<T> store_;
};

// Fourier-feature MLP backend: positional encoding on the (bbox-normalized)
// position feeds a relu trunk; the density head reads trunk features only,
// the color head reads trunk features plus the encoded view direction.
template <class T>
class MLPField {
public:
    using Scalar = T;

    struct Workspace {
        bool inside = false;
        std::vector<T> pos_enc, dir_enc;
        std::vector<std::vector<T>> hidden;  // post-relu activations per trunk layer
        std::vector<T> color_hidden;         // post-relu
        double sigma_pre = 0.0;
        double rgb_pre[3] = {};
        std::vector<T> scratch;
        FieldQueryResult result;
    };

    MLPField() = default;
    MLPField(const Vec3& bbox_min, const Vec3& bbox_max, int depth = 4, int width = 64, int l_pos = 6, int l_dir = 4,
             uint64_t seed = 1)
        : lo_(bbox_min), hi_(bbox_max), depth_(depth), width_(width), l_pos_(l_pos), l_dir_(l_dir) {
        if (!(hi_.x > lo_.x && hi_.y > lo_.y && hi_.z > lo_.z))
            throw std::invalid_argument("MLPField: bbox_max must exceed bbox_min");
        if (depth < 1 || width < 2) throw std::invalid_argument("MLPField: need depth >= 1, width >= 2");
        layout();
        store_.init(static_cast<size_t>(param_count_));
        seed_parameters(seed);
    }

    int depth() const { return depth_; }
    int width() const { return width_; }
    int l_pos() const { return l_pos_; }
    int l_dir() const { return l_dir_; }
    Vec3 bbox_min() const { return lo_; }
    Vec3 bbox_max() const { return hi_; }
    ParamStore<T>& store() { return store_; }
    const ParamStore<T>& store() const { return store_; }

    // Symmetric uniform init, +-sqrt(6 / (fan_in + fan_out)); biases zero.
    void seed_parameters(uint64_t seed) {
        Pcg32 rng(seed, 0x9d2c5680);
        for (const auto& layer : layers_) {
            const double a = std::sqrt(6.0 / (layer.in + layer.out));
            for (int i = 0; i < layer.in * layer.out; ++i)
                store_.params[layer.w_off + i] = static_cast<T>(rng.next_double(-a, a));
            for (int i = 0; i < layer.out; ++i) store_.params[layer.b_off + i] = T(0);
        }
    }

    FieldQueryResult forward(const Vec3& pos, const Vec3& dir, Workspace& ws) const {
        ws.inside = pos.x >= lo_.x && pos.x <= hi_.x && pos.y >= lo_.y && pos.y <= hi_.y && pos.z >= lo_.z &&
                    pos.z <= hi_.z;
        if (!ws.inside) {
            ws.result = FieldQueryResult{};
            return ws.result;
        }
        encode(normalized(pos), l_pos_, ws.pos_enc);
        encode({dir.x, dir.y, dir.z}, l_dir_, ws.dir_enc);

        ws.hidden.resize(static_cast<size_t>(depth_));
        const std::vector<T>* input = &ws.pos_enc;
        for (int layer = 0; layer < depth_; ++layer) {
            apply_layer(layers_[static_cast<size_t>(layer)], *input, ws.hidden[static_cast<size_t>(layer)], true);
            input = &ws.hidden[static_cast<size_t>(layer)];
        }
        const std::vector<T>& features = *input;

        // density head
        const Layer& ls = layers_[static_cast<size_t>(depth_)];
        double pre = static_cast<double>(store_.params[ls.b_off]);
        for (int i = 0; i < ls.in; ++i)
            pre += static_cast<double>(store_.params[ls.w_off + i]) * static_cast<double>(features[i]);
        ws.sigma_pre = pre;

        // color head
        ws.scratch.resize(static_cast<size_t>(width_ + dir_enc_len()));
        for (int i = 0; i < width_; ++i) ws.scratch[i] = features[i];
        for (int i = 0; i < dir_enc_len(); ++i) ws.scratch[width_ + i] = ws.dir_enc[i];
        const Layer& lc1 = layers_[static_cast<size_t>(depth_) + 1];
        apply_layer(lc1, ws.scratch, ws.color_hidden, true);
        const Layer& lc2 = layers_[static_cast<size_t>(depth_) + 2];
        for (int o = 0; o < 3; ++o) {
            double acc = static_cast<double>(store_.params[lc2.b_off + o]);
            const T* wrow = store_.params.data() + lc2.w_off + static_cast<size_t>(o) * lc2.in;
            for (int i = 0; i < lc2.in; ++i) acc += static_cast<double>(wrow[i]) * static_cast<double>(ws.color_hidden[i]);
            ws.rgb_pre[o] = acc;
        }

        ws.result.sigma = act::softplus(ws.sigma_pre);
        ws.result.rgb = {act::sigmoid(ws.rgb_pre[0]), act::sigmoid(ws.rgb_pre[1]), act::sigmoid(ws.rgb_pre[2])};
        return ws.result;
    }

    void backward(const Workspace& ws, const Vec3& d_rgb, double d_sigma) {
        if (!ws.inside) return;
        const double d_sigma_pre = d_sigma * act::sigmoid(ws.sigma_pre);
        double d_rgb_pre[3];
        const double s[3] = {ws.result.rgb.x, ws.result.rgb.y, ws.result.rgb.z};
        for (int c = 0; c < 3; ++c) d_rgb_pre[c] = (c == 0 ? d_rgb.x : (c == 1 ? d_rgb.y : d_rgb.z)) * s[c] * (1.0 - s[c]);

        T* g = store_.grads.data();
        const T* p = store_.params.data();

        // color output layer
        const Layer& lc2 = layers_[static_cast<size_t>(depth_) + 2];
        std::vector<double> d_color_hidden(static_cast<size_t>(lc2.in), 0.0);
        for (int o = 0; o < 3; ++o) {
            g[lc2.b_off + o] += static_cast<T>(d_rgb_pre[o]);
            const size_t row = lc2.w_off + static_cast<size_t>(o) * lc2.in;
            for (int i = 0; i < lc2.in; ++i) {
                g[row + i] += static_cast<T>(d_rgb_pre[o] * static_cast<double>(ws.color_hidden[i]));
                d_color_hidden[static_cast<size_t>(i)] += d_rgb_pre[o] * static_cast<double>(p[row + i]);
            }
        }

        // color hidden layer (relu)
        const Layer& lc1 = layers_[static_cast<size_t>(depth_) + 1];
        const std::vector<T>& features = ws.hidden[static_cast<size_t>(depth_ - 1)];
        std::vector<double> d_concat(static_cast<size_t>(lc1.in), 0.0);
        for (int o = 0; o < lc1.out; ++o) {
            if (ws.color_hidden[o] <= T(0)) continue;  // relu gate
            const double dh = d_color_hidden[static_cast<size_t>(o)];
            g[lc1.b_off + o] += static_cast<T>(dh);
            const size_t row = lc1.w_off + static_cast<size_t>(o) * lc1.in;
            for (int i = 0; i < lc1.in; ++i) {
                const double in_i = i < width_ ? static_cast<double>(features[i])
                                               : static_cast<double>(ws.dir_enc[i - width_]);
                g[row + i] += static_cast<T>(dh * in_i);
                d_concat[static_cast<size_t>(i)] += dh * static_cast<double>(p[row + i]);
            }
        }

        // density head + gather feature gradient
        std::vector<double> d_features(static_cast<size_t>(width_), 0.0);
        for (int i = 0; i < width_; ++i) d_features[static_cast<size_t>(i)] = d_concat[static_cast<size_t>(i)];
        const Layer& ls = layers_[static_cast<size_t>(depth_)];
        g[ls.b_off] += static_cast<T>(d_sigma_pre);
        for (int i = 0; i < ls.in; ++i) {
            g[ls.w_off + i] += static_cast<T>(d_sigma_pre * static_cast<double>(features[i]));
            d_features[static_cast<size_t>(i)] += d_sigma_pre * static_cast<double>(p[ls.w_off + i]);
        }

        // trunk, top down
        std::vector<double> d_out = std::move(d_features);
        for (int layer = depth_ - 1; layer >= 0; --layer) {
            const Layer& L = layers_[static_cast<size_t>(layer)];
            const std::vector<T>& out_act = ws.hidden[static_cast<size_t>(layer)];
            const std::vector<T>& in_act = layer == 0 ? ws.pos_enc : ws.hidden[static_cast<size_t>(layer - 1)];
            std::vector<double> d_in(static_cast<size_t>(L.in), 0.0);
            for (int o = 0; o < L.out; ++o) {
                if (out_act[o] <= T(0)) continue;
                const double dh = d_out[static_cast<size_t>(o)];
                g[L.b_off + o] += static_cast<T>(dh);
                const size_t row = L.w_off + static_cast<size_t>(o) * L.in;
                for (int i = 0; i < L.in; ++i) {
                    g[row + i] += static_cast<T>(dh * static_cast<double>(in_act[i]));
                    d_in[static_cast<size_t>(i)] += dh * static_cast<double>(p[row + i]);
                }
            }
            d_out = std::move(d_in);
        }
    }

    FieldQueryResult query(const Vec3& pos, const Vec3& dir) const {
        detail::check_unit_direction(dir);
        Workspace ws;
        return forward(pos, dir, ws);
    }

    void query_with_grad(const Vec3& pos, const Vec3& dir, const Vec3& d_rgb, double d_sigma) {
        detail::check_unit_direction(dir);
        Workspace ws;
        forward(pos, dir, ws);
        backward(ws, d_rgb, d_sigma);
    }

    static constexpr bool uses_direction = true;

    int pos_enc_len() const { return 6 * l_pos_; }
    int dir_enc_len() const { return 6 * l_dir_; }

private:
    struct Layer {
        int in = 0, out = 0;
        size_t w_off = 0, b_off = 0;
    };

    void layout() {
        layers_.clear();
        size_t off = 0;
        auto add = [&](int in, int out) {
            Layer L;
            L.in = in;
            L.out = out;
            L.w_off = off;
            off += static_cast<size_t>(in) * out;
            L.b_off = off;
            off += static_cast<size_t>(out);
            layers_.push_back(L);
        };
        add(pos_enc_len(), width_);
        for (int d = 1; d < depth_; ++d) add(width_, width_);
        add(width_, 1);                                    // density head
        add(width_ + dir_enc_len(), std::max(2, width_ / 2));  // color hidden
        add(std::max(2, width_ / 2), 3);                   // color output
        param_count_ = off;
    }

    void apply_layer(const Layer& L, const std::vector<T>& in, std::vector<T>& out, bool relu) const {
        out.resize(static_cast<size_t>(L.out));
        const T* p = store_.params.data();
        for (int o = 0; o < L.out; ++o) {
            double acc = static_cast<double>(p[L.b_off + o]);
            const T* wrow = p + L.w_off + static_cast<size_t>(o) * L.in;
            for (int i = 0; i < L.in; ++i) acc += static_cast<double>(wrow[i]) * static_cast<double>(in[i]);
            out[static_cast<size_t>(o)] = relu && acc < 0.0 ? T(0) : static_cast<T>(acc);
        }
    }

    std::vector<double> normalized(const Vec3& pos) const {
        return {(pos.x - lo_.x) / (hi_.x - lo_.x), (pos.y - lo_.y) / (hi_.y - lo_.y),
                (pos.z - lo_.z) / (hi_.z - lo_.z)};
    }

    static void encode(const std::vector<double>& x, int L, std::vector<T>& out) {
        out.resize(x.size() * 2 * static_cast<size_t>(L));
        size_t idx = 0;
        for (double xi : x) {
            double freq = kPi;
            for (int k = 0; k < L; ++k) {
                out[idx++] = static_cast<T>(std::sin(freq * xi));
                out[idx++] = static_cast<T>(std::cos(freq * xi));
                freq *= 2.0;
            }
        }
    }

    Vec3 lo_, hi_;
    int depth_ = 4, width_ = 64, l_pos_ = 6, l_dir_ = 4;
    size_t param_count_ = 0;
    std::vector<Layer> layers_;
    ParamStore<T> store_;
};

// ---------------------------------------------------------------------------
// Checkpoints: 8-byte magic, backend tag, architecture header, then the
// parameter vector as little-endian float32.

inline constexpr char kCheckpointMagic[8] = {'R', 'F', 'L', 'D', '0', '0', '0', '1'};

enum class FieldBackend : uint32_t { Grid = 0, Mlp = 1 };

struct Checkpoint {
    FieldBackend backend = FieldBackend::Grid;
    int grid_res = 0;
    int mlp_depth = 0, mlp_width = 0, mlp_l_pos = 0, mlp_l_dir = 0;
    Vec3 bbox_min, bbox_max;
    std::vector<float> params;
};

namespace detail {

template <class V>
void write_raw(std::ofstream& out, const V& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(V));
}

template <class V>
void read_raw(std::ifstream& in, V& value, const std::string& path) {
    in.read(reinterpret_cast<char*>(&value), sizeof(V));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
}

inline void write_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    write_raw(out, static_cast<uint32_t>(ckpt.backend));
    if (ckpt.backend == FieldBackend::Grid) {
        write_raw(out, static_cast<int32_t>(ckpt.grid_res));
    } else {
        write_raw(out, static_cast<int32_t>(ckpt.mlp_depth));
        write_raw(out, static_cast<int32_t>(ckpt.mlp_width));
        write_raw(out, static_cast<int32_t>(ckpt.mlp_l_pos));
        write_raw(out, static_cast<int32_t>(ckpt.mlp_l_dir));
    }
    const double box[6] = {ckpt.bbox_min.x, ckpt.bbox_min.y, ckpt.bbox_min.z,
                           ckpt.bbox_max.x, ckpt.bbox_max.y, ckpt.bbox_max.z};
    out.write(reinterpret_cast<const char*>(box), sizeof(box));
    write_raw(out, static_cast<uint64_t>(ckpt.params.size()));
    out.write(reinterpret_cast<const char*>(ckpt.params.data()),
              static_cast<std::streamsize>(ckpt.params.size() * sizeof(float)));
    if (!out) throw std::runtime_error("short write: " + path);
}

}  // namespace detail

template <class T>
Checkpoint make_checkpoint(const GridField<T>& field) {
    Checkpoint ckpt;
    ckpt.backend = FieldBackend::Grid;
    ckpt.grid_res = field.resolution();
    ckpt.bbox_min = field.bbox_min();
    ckpt.bbox_max = field.bbox_max();
    ckpt.params.assign(field.store().params.begin(), field.store().params.end());
    return ckpt;
}

template <class T>
Checkpoint make_checkpoint(const MLPField<T>& field) {
    Checkpoint ckpt;
    ckpt.backend = FieldBackend::Mlp;
    ckpt.mlp_depth = field.depth();
    ckpt.mlp_width = field.width();
    ckpt.mlp_l_pos = field.l_pos();
    ckpt.mlp_l_dir = field.l_dir();
    ckpt.bbox_min = field.bbox_min();
    ckpt.bbox_max = field.bbox_max();
    ckpt.params.assign(field.store().params.begin(), field.store().params.end());
    return ckpt;
}

template <class Field>
void save_checkpoint(const std::string& path, const Field& field) {
    detail::write_checkpoint(path, make_checkpoint(field));
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0)
        throw std::runtime_error("not a checkpoint file (bad magic): " + path);
    Checkpoint ckpt;
    uint32_t backend = 0;
    detail::read_raw(in, backend, path);
    if (backend > 1) throw std::runtime_error("unknown checkpoint backend tag: " + path);
    ckpt.backend = static_cast<FieldBackend>(backend);
    if (ckpt.backend == FieldBackend::Grid) {
        int32_t res = 0;
        detail::read_raw(in, res, path);
        ckpt.grid_res = res;
    } else {
        int32_t d = 0, w = 0, lp = 0, ld = 0;
        detail::read_raw(in, d, path);
        detail::read_raw(in, w, path);
        detail::read_raw(in, lp, path);
        detail::read_raw(in, ld, path);
        ckpt.mlp_depth = d;
        ckpt.mlp_width = w;
        ckpt.mlp_l_pos = lp;
        ckpt.mlp_l_dir = ld;
    }
    double box[6];
    in.read(reinterpret_cast<char*>(box), sizeof(box));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    ckpt.bbox_min = {box[0], box[1], box[2]};
    ckpt.bbox_max = {box[3], box[4], box[5]};
    uint64_t count = 0;
    detail::read_raw(in, count, path);
    ckpt.params.resize(count);
    in.read(reinterpret_cast<char*>(ckpt.params.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (!in) throw std::runtime_error("truncated checkpoint: " + path);
    return ckpt;
}

template <class T>
GridField<T> grid_field_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.backend != FieldBackend::Grid) throw std::runtime_error("checkpoint is not a grid field");
    GridField<T> field(ckpt.grid_res, ckpt.bbox_min, ckpt.bbox_max);
    if (ckpt.params.size() != field.store().size()) throw std::runtime_error("checkpoint parameter count mismatch");
    for (size_t i = 0; i < ckpt.params.size(); ++i) field.store().params[i] = static_cast<T>(ckpt.params[i]);
    return field;
}

template <class T>
MLPField<T> mlp_field_from_checkpoint(const Checkpoint& ckpt) {
    if (ckpt.backend != FieldBackend::Mlp) throw std::runtime_error("checkpoint is not an MLP field");
    MLPField<T> field(ckpt.bbox_min, ckpt.bbox_max, ckpt.mlp_depth, ckpt.mlp_width, ckpt.mlp_l_pos, ckpt.mlp_l_dir);
    if (ckpt.params.size() != field.store().size()) throw std::runtime_error("checkpoint parameter count mismatch");
    for (size_t i = 0; i < ckpt.params.size(); ++i) field.store().params[i] = static_cast<T>(ckpt.params[i]);
    return field;
}

}  // namespace refray
