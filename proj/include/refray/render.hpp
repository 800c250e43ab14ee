#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "refray/camera.hpp"
#include "refray/field.hpp"
#include "refray/parallel.hpp"
#include "refray/refract.hpp"
#include "refray/rng.hpp"
#include "refray/vec.hpp"

namespace refray {

// One volume-rendering sample: activation outputs plus the arc-length
// spacing delta it covers.
struct RaySample {
    Vec3 rgb;
    double sigma = 0.0;
    double delta = 0.0;
};

struct RenderResult {
    Vec3 rgb;
    std::vector<double> transmittance;  // T_i before sample i; T_1 = 1
    std::vector<double> alpha;          // 1 - exp(-sigma_i delta_i)
    double final_transmittance = 1.0;   // T_{N+1}
};

// Front-to-back alpha compositing:
//   C = sum_i T_i (1 - exp(-sigma_i delta_i)) c_i,  T_i = exp(-sum_{j<i} sigma_j delta_j).
inline RenderResult composite(const std::vector<RaySample>& samples) {
    if (samples.empty()) throw std::invalid_argument("composite: empty sample list");
    RenderResult out;
    out.transmittance.resize(samples.size());
    out.alpha.resize(samples.size());
    double T = 1.0;
    Vec3 rgb{0, 0, 0};
    for (size_t i = 0; i < samples.size(); ++i) {
        const double extinction = std::exp(-samples[i].sigma * samples[i].delta);
        const double a = 1.0 - extinction;
        out.transmittance[i] = T;
        out.alpha[i] = a;
        rgb += (T * a) * samples[i].rgb;
        T *= extinction;
    }
    out.rgb = rgb;
    out.final_transmittance = T;
    return out;
}

// Analytic gradients of composite() w.r.t. per-sample color and density:
//   d/dc_i     = u . T_i alpha_i
//   d/dsigma_i = delta_i [ T_{i+1} (u . c_i) - sum_{k>i} T_k alpha_k (u . c_k) ]
inline void composite_backward(const std::vector<RaySample>& samples, const RenderResult& fwd, const Vec3& upstream,
                               std::vector<Vec3>& d_rgb, std::vector<double>& d_sigma) {
    const size_t n = samples.size();
    if (n == 0) throw std::invalid_argument("composite_backward: empty sample list");
    d_rgb.resize(n);
    d_sigma.resize(n);
    double suffix = 0.0;  // sum_{k>i} T_k alpha_k (u . c_k)
    for (size_t ii = n; ii-- > 0;) {
        const double w = fwd.transmittance[ii] * fwd.alpha[ii];
        const double uc = dot(upstream, samples[ii].rgb);
        d_rgb[ii] = upstream * w;
        const double T_next = fwd.transmittance[ii] * (1.0 - fwd.alpha[ii]);
        d_sigma[ii] = samples[ii].delta * (T_next * uc - suffix);
        suffix += w * uc;
    }
}

inline std::pair<std::vector<Vec3>, std::vector<double>> composite_backward(const std::vector<RaySample>& samples,
                                                                            const Vec3& upstream) {
    const RenderResult fwd = composite(samples);
    std::pair<std::vector<Vec3>, std::vector<double>> out;
    composite_backward(samples, fwd, upstream, out.first, out.second);
    return out;
}

// Mean squared photometric error over a batch: L = (1/V) sum ||C_hat - C||^2,
// with per-ray gradient (2/V)(C_hat - C).
struct LossResult {
    double loss = 0.0;
    std::vector<Vec3> d_rendered;
};

inline LossResult loss_mse(const std::vector<Vec3>& rendered, const std::vector<Vec3>& truth) {
    if (rendered.size() != truth.size()) throw std::invalid_argument("loss_mse: length mismatch");
    if (rendered.empty()) throw std::invalid_argument("loss_mse: empty batch");
    LossResult out;
    out.d_rendered.resize(rendered.size());
    const double inv_v = 1.0 / static_cast<double>(rendered.size());
    for (size_t i = 0; i < rendered.size(); ++i) {
        const Vec3 e = rendered[i] - truth[i];
        out.loss += norm2(e) * inv_v;
        out.d_rendered[i] = e * (2.0 * inv_v);
    }
    return out;
}

// Standard bias-corrected Adam. Consumes and zeroes the gradient accumulator.
template <class T>
void adam_step(ParamStore<T>& store, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8) {
    ++store.step;
    const T b1 = static_cast<T>(beta1);
    const T b2 = static_cast<T>(beta2);
    const T one_m_b1 = T(1) - b1;
    const T one_m_b2 = T(1) - b2;
    const T c1 = static_cast<T>(1.0 / (1.0 - std::pow(beta1, static_cast<double>(store.step))));
    const T c2 = static_cast<T>(1.0 / (1.0 - std::pow(beta2, static_cast<double>(store.step))));
    const T step_size = static_cast<T>(lr);
    const T epsilon = static_cast<T>(eps);
    T* p = store.params.data();
    T* g = store.grads.data();
    T* m = store.m.data();
    T* v = store.v.data();
    const size_t n = store.size();
    for (size_t i = 0; i < n; ++i) {
        const T gi = g[i];
        g[i] = T(0);
        const T mi = m[i] = b1 * m[i] + one_m_b1 * gi;
        const T vi = v[i] = b2 * v[i] + one_m_b2 * gi * gi;
        p[i] -= step_size * (mi * c1) / (std::sqrt(vi * c2) + epsilon);
    }
}

enum class RenderMode { Straight, Refract };

inline const char* to_string(RenderMode m) { return m == RenderMode::Straight ? "straight" : "refract"; }

struct TrainConfig {
    int batch_rays = 1024;
    int samples_per_ray = 128;
    long long iterations = 20000;
    double learning_rate = 5e-3;  // grid default; MLP runs want 5e-4
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    RenderMode mode = RenderMode::Straight;
    uint64_t seed = 42;
    double t_near = 0.1;
    double t_far = 10.0;
    bool jitter_samples = false;
    int log_every = 100;

    void validate() const {
        if (batch_rays < 1 || samples_per_ray < 2 || iterations < 0)
            throw std::invalid_argument("train config: counts must be positive");
        if (!(t_far > t_near) || t_near < 0.0) throw std::invalid_argument("train config: need 0 <= t_near < t_far");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("train config: learning rate must be > 0");
    }
};

struct TrainLogEntry {
    long long iteration = 0;
    double loss = 0.0;
    double elapsed_seconds = 0.0;
};

inline void write_train_log_csv(std::ostream& os, const std::vector<TrainLogEntry>& log) {
    os << "iteration,loss,elapsed_seconds\n";
    char buf[128];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%lld,%.9g,%.3f\n", e.iteration, e.loss, e.elapsed_seconds);
        os << buf;
    }
}

namespace detail {

template <class Field>
struct RayWorkspace {
    std::vector<SamplePoint> points;
    std::vector<RaySample> samples;
    std::vector<typename Field::Workspace> field_ws;
    RenderResult fwd;
    std::vector<Vec3> d_rgb;
    std::vector<double> d_sigma;
};

// Samples one path and runs the field forward pass for every sample.
template <class Field>
Vec3 forward_ray(const Field& field, const RayPath& path, double t_near, double t_far, int count,
                 RayWorkspace<Field>& ws, Pcg32* jitter) {
    sample_path(path, t_near, t_far, count, ws.points, jitter);
    ws.samples.resize(ws.points.size());
    ws.field_ws.resize(ws.points.size());
    for (size_t s = 0; s < ws.points.size(); ++s) {
        const FieldQueryResult q = field.forward(ws.points[s].position, ws.points[s].direction, ws.field_ws[s]);
        ws.samples[s] = RaySample{q.rgb, q.sigma, ws.points[s].delta};
    }
    ws.fwd = composite(ws.samples);
    return ws.fwd.rgb;
}

}  // namespace detail

// Optimizes the field on random pixel batches. Mode Refract bends rays
// through the hull; mode Straight is the plain-NeRF baseline sharing every
// other component. Runs single threaded, which makes results bit-exact for a
// fixed seed.
template <class Field>
std::vector<TrainLogEntry> train(const std::vector<View>& views, Field& field, const AccelMesh* accel, double ior,
                                 const TrainConfig& config, std::ostream* progress = nullptr) {
    config.validate();
    if (views.empty()) throw std::invalid_argument("train: empty train set");
    for (const auto& v : views)
        if (v.image.empty()) throw std::invalid_argument("train: view '" + v.name + "' has no image");
    if (config.mode == RenderMode::Refract && accel == nullptr)
        throw std::invalid_argument("train: refract mode requires a hull mesh");

    Pcg32 rng(config.seed, 0x5851f42d);
    Pcg32 jitter_rng(config.seed ^ 0x9e3779b97f4a7c15ULL, 0x14057b7e);
    Pcg32* jitter = config.jitter_samples ? &jitter_rng : nullptr;

    std::vector<Vec3> rendered(static_cast<size_t>(config.batch_rays));
    std::vector<Vec3> truth(static_cast<size_t>(config.batch_rays));
    // The backward pass needs the forward caches of the whole batch, so
    // scratch is kept per ray and reused across iterations.
    std::vector<detail::RayWorkspace<Field>> batch_ws(static_cast<size_t>(config.batch_rays));

    std::vector<TrainLogEntry> log;
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    for (long long iter = 1; iter <= config.iterations; ++iter) {
        for (int r = 0; r < config.batch_rays; ++r) {
            const auto& view = views[rng.next_below(static_cast<uint32_t>(views.size()))];
            const int px = static_cast<int>(rng.next_below(static_cast<uint32_t>(view.intrinsics.width)));
            const int py = static_cast<int>(rng.next_below(static_cast<uint32_t>(view.intrinsics.height)));
            const Ray ray = pixel_ray(view, px + 0.5, py + 0.5);
            const RayPath path = config.mode == RenderMode::Refract ? build_path(ray, *accel, ior, config.t_far)
                                                                    : straight_path(ray, config.t_far);
            rendered[static_cast<size_t>(r)] =
                detail::forward_ray(field, path, config.t_near, config.t_far, config.samples_per_ray,
                                    batch_ws[static_cast<size_t>(r)], jitter);
            truth[static_cast<size_t>(r)] = view.image.at(px, py);
        }

        const LossResult loss = loss_mse(rendered, truth);
        for (int r = 0; r < config.batch_rays; ++r) {
            auto& rws = batch_ws[static_cast<size_t>(r)];
            composite_backward(rws.samples, rws.fwd, loss.d_rendered[static_cast<size_t>(r)], rws.d_rgb, rws.d_sigma);
            for (size_t s = 0; s < rws.samples.size(); ++s)
                field.backward(rws.field_ws[s], rws.d_rgb[s], rws.d_sigma[s]);
        }
        adam_step(field.store(), config.learning_rate, config.beta1, config.beta2, config.epsilon);

        if (iter % config.log_every == 0 || iter == config.iterations) {
            log.push_back({iter, loss.loss, elapsed()});
            if (progress && (iter % (config.log_every * 10) == 0 || iter == config.iterations)) {
                char buf[160];
                std::snprintf(buf, sizeof(buf), "[train] iter %lld/%lld loss %.6g elapsed %.1fs\n", iter,
                              config.iterations, loss.loss, elapsed());
                (*progress) << buf << std::flush;
            }
        }
    }
    return log;
}

// Renders a full view, one composite per pixel. Parallelizes over rows;
// pixels are independent, so the image is identical for any thread count.
template <class Field>
Image render_image(const Field& field, const View& view, RenderMode mode, const AccelMesh* accel, double ior,
                   double t_near, double t_far, int samples_per_ray, unsigned threads = 1) {
    if (mode == RenderMode::Refract && accel == nullptr)
        throw std::invalid_argument("render_image: refract mode requires a hull mesh");
    const int W = view.intrinsics.width;
    const int H = view.intrinsics.height;
    Image img(W, H);
    parallel_for_chunks(static_cast<size_t>(H), threads, [&](size_t row_begin, size_t row_end) {
        detail::RayWorkspace<Field> ws;
        for (size_t y = row_begin; y < row_end; ++y) {
            for (int x = 0; x < W; ++x) {
                const Ray ray = pixel_ray(view, x + 0.5, static_cast<double>(y) + 0.5);
                const RayPath path =
                    mode == RenderMode::Refract ? build_path(ray, *accel, ior, t_far) : straight_path(ray, t_far);
                img.set(x, static_cast<int>(y),
                        detail::forward_ray(field, path, t_near, t_far, samples_per_ray, ws, nullptr));
            }
        }
    });
    return img;
}

// Peak signal-to-noise ratio in dB over all pixels and channels, capped at
// 99 dB (the reported value for an exact match).
inline double psnr(const Image& img, const Image& ref) {
    if (img.width != ref.width || img.height != ref.height) throw std::invalid_argument("psnr: dimension mismatch");
    if (img.empty()) throw std::invalid_argument("psnr: empty image");
    double se = 0.0;
    for (size_t i = 0; i < img.data.size(); ++i) {
        const double d = img.data[i] - ref.data[i];
        se += d * d;
    }
    const double mse = se / static_cast<double>(img.data.size());
    if (mse <= 0.0) return 99.0;
    return std::min(99.0, 10.0 * std::log10(1.0 / mse));
}

// Per-sample report for one pixel's ray, mirroring the training sampling.
struct TraceRow {
    int index = 0;
    Vec3 position;
    Vec3 direction;
    double sigma = 0.0;
    Vec3 rgb;
    double transmittance = 1.0;
    double alpha = 0.0;
};

template <class Field>
std::vector<TraceRow> trace_pixel(const Field& field, const View& view, int px, int py, RenderMode mode,
                                  const AccelMesh* accel, double ior, double t_near, double t_far,
                                  int samples_per_ray) {
    if (px < 0 || px >= view.intrinsics.width || py < 0 || py >= view.intrinsics.height)
        throw std::invalid_argument("trace_pixel: pixel outside image");
    if (mode == RenderMode::Refract && accel == nullptr)
        throw std::invalid_argument("trace_pixel: refract mode requires a hull mesh");
    const Ray ray = pixel_ray(view, px + 0.5, py + 0.5);
    const RayPath path = mode == RenderMode::Refract ? build_path(ray, *accel, ior, t_far) : straight_path(ray, t_far);
    detail::RayWorkspace<Field> ws;
    detail::forward_ray(field, path, t_near, t_far, samples_per_ray, ws, nullptr);
    std::vector<TraceRow> rows(ws.samples.size());
    for (size_t s = 0; s < ws.samples.size(); ++s) {
        rows[s] = TraceRow{static_cast<int>(s),      ws.points[s].position, ws.points[s].direction,
                           ws.samples[s].sigma,      ws.samples[s].rgb,     ws.fwd.transmittance[s],
                           ws.fwd.alpha[s]};
    }
    return rows;
}

inline void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& rows) {
    os << "index,x,y,z,dir_x,dir_y,dir_z,sigma,r,g,b,T,alpha\n";
    char buf[384];
    for (const auto& row : rows) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", row.index,
                      row.position.x, row.position.y, row.position.z, row.direction.x, row.direction.y,
                      row.direction.z, row.sigma, row.rgb.x, row.rgb.y, row.rgb.z, row.transmittance, row.alpha);
        os << buf;
    }
}

}  // namespace refray
