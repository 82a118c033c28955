#include "livseg/neural/cnn.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "json.hpp"
#include "livseg/core/parallel.hpp"
#include "livseg/core/rng.hpp"
#include "cnn_internal.hpp"

namespace livseg::neural {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::VectorXd>;

constexpr double kClampLo = 1e-12;
constexpr double kClampHi = 1.0 - 1e-12;
constexpr std::size_t kChunk = 4;  // fixed reduction granularity

std::size_t cube(int n) { return static_cast<std::size_t>(n) * n * n; }

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Rows: output voxels of an n^3 grid; columns: 27 kernel taps x c channels.
void im2col(const double* in, int n, int c, RowMat& col) {
    col.setZero(cube(n), 27 * static_cast<std::size_t>(c));
    std::size_t row = 0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x, ++row) {
                double* dst = col.data() + row * col.cols();
                for (int kz = -1; kz <= 1; ++kz)
                    for (int ky = -1; ky <= 1; ++ky)
                        for (int kx = -1; kx <= 1; ++kx, dst += c) {
                            const int zz = z + kz, yy = y + ky, xx = x + kx;
                            if (zz < 0 || yy < 0 || xx < 0 || zz >= n || yy >= n || xx >= n) continue;
                            std::memcpy(dst, in + ((static_cast<std::size_t>(zz) * n + yy) * n + xx) * c,
                                        sizeof(double) * c);
                        }
            }
}

void col2im(const RowMat& col, int n, int c, AlignedVector& out) {
    out.assign(cube(n) * c, 0.0);
    std::size_t row = 0;
    for (int z = 0; z < n; ++z)
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x, ++row) {
                const double* src = col.data() + row * col.cols();
                for (int kz = -1; kz <= 1; ++kz)
                    for (int ky = -1; ky <= 1; ++ky)
                        for (int kx = -1; kx <= 1; ++kx, src += c) {
                            const int zz = z + kz, yy = y + ky, xx = x + kx;
                            if (zz < 0 || yy < 0 || xx < 0 || zz >= n || yy >= n || xx >= n) continue;
                            double* dst = out.data() + ((static_cast<std::size_t>(zz) * n + yy) * n + xx) * c;
                            for (int k = 0; k < c; ++k) dst[k] += src[k];
                        }
            }
}

// 2x2x2 max pool with floor; ties go to the first window position.
void max_pool(const AlignedVector& in, int n, int c, AlignedVector& out, std::vector<std::uint32_t>& arg) {
    const int m = n / 2;
    out.assign(cube(m) * c, 0.0);
    arg.assign(out.size(), 0);
    for (int z = 0; z < m; ++z)
        for (int y = 0; y < m; ++y)
            for (int x = 0; x < m; ++x)
                for (int k = 0; k < c; ++k) {
                    double best = 0.0;
                    std::uint32_t best_i = 0;
                    bool first = true;
                    for (int dz = 0; dz < 2; ++dz)
                        for (int dy = 0; dy < 2; ++dy)
                            for (int dx = 0; dx < 2; ++dx) {
                                const auto i = static_cast<std::uint32_t>(
                                    ((static_cast<std::size_t>(2 * z + dz) * n + 2 * y + dy) * n + 2 * x + dx) * c + k);
                                if (first || in[i] > best) {
                                    best = in[i];
                                    best_i = i;
                                    first = false;
                                }
                            }
                    const std::size_t o = ((static_cast<std::size_t>(z) * m + y) * m + x) * c + k;
                    out[o] = best;
                    arg[o] = best_i;
                }
}

struct Geometry {
    std::vector<int> edge_in;   // spatial edge entering each conv
    std::vector<bool> pooled;   // pool actually applied after each conv
};

Geometry geometry(const CnnArchitecture& a) {
    Geometry g;
    int n = a.patch_size;
    for (std::size_t l = 0; l < a.conv_channels.size(); ++l) {
        g.edge_in.push_back(n);
        const bool wants = std::find(a.pool_after.begin(), a.pool_after.end(), static_cast<int>(l)) != a.pool_after.end();
        const bool apply = wants && n > 1;
        g.pooled.push_back(apply);
        if (apply) n /= 2;
    }
    return g;
}

int patch_edge(const Tensor& batch, std::size_t& n_samples) {
    const auto& s = batch.shape;
    if (s.size() == 4) {
        n_samples = static_cast<std::size_t>(s[0]);
        if (s[1] != s[2] || s[2] != s[3]) throw InvalidArgument("forward: patches must be cubic");
        return s[1];
    }
    if (s.size() == 5) {
        if (s[1] != 1) throw InvalidArgument("forward: patches must have exactly one channel");
        n_samples = static_cast<std::size_t>(s[0]);
        if (s[2] != s[3] || s[3] != s[4]) throw InvalidArgument("forward: patches must be cubic");
        return s[2];
    }
    throw InvalidArgument("forward: batch must be (N, s, s, s) or (N, 1, s, s, s)");
}

void forward_sample(const Cnn3dModel& model, const Geometry& geo, const double* patch, ForwardCache::Sample& st,
                    bool keep) {
    const auto& a = model.architecture();
    const auto& P = model.params();
    const auto& sl = model.slices();
    AlignedVector act(patch, patch + model.voxels_per_patch());
    int c = 1;
    RowMat col;
    if (keep) {
        st.conv_in.resize(a.conv_channels.size());
        st.conv_out.resize(a.conv_channels.size());
        st.pool_arg.resize(a.conv_channels.size());
    }
    for (std::size_t l = 0; l < a.conv_channels.size(); ++l) {
        const int n = geo.edge_in[l];
        const int co = a.conv_channels[l];
        im2col(act.data(), n, c, col);
        if (keep) st.conv_in[l] = act;
        AlignedVector out(cube(n) * co);
        MapMat o(out.data(), static_cast<Eigen::Index>(cube(n)), co);
        CMapMat w(P.data() + sl[l].weight, static_cast<Eigen::Index>(sl[l].weight_rows), co);
        const Eigen::Map<const Eigen::RowVectorXd> b(P.data() + sl[l].bias, co);
        o.noalias() = col * w;
        o.rowwise() += b;
        for (double& v : out) v = v > 0.0 ? v : 0.0;
        if (keep) st.conv_out[l] = out;
        if (geo.pooled[l]) {
            AlignedVector pooled;
            std::vector<std::uint32_t> arg;
            max_pool(out, n, co, pooled, arg);
            if (keep) st.pool_arg[l] = std::move(arg);
            act = std::move(pooled);
        } else {
            act = std::move(out);
        }
        c = co;
    }
    const auto& f1 = sl[sl.size() - 2];
    const auto& f2 = sl.back();
    const int h = a.fc_hidden;
    AlignedVector hidden(h);
    Eigen::Map<Eigen::RowVectorXd> hv(hidden.data(), h);
    const Eigen::Map<const Eigen::RowVectorXd> flat(act.data(), static_cast<Eigen::Index>(act.size()));
    hv.noalias() = flat * CMapMat(P.data() + f1.weight, static_cast<Eigen::Index>(f1.weight_rows), h);
    hv += Eigen::Map<const Eigen::RowVectorXd>(P.data() + f1.bias, h);
    for (double& v : hidden) v = v > 0.0 ? v : 0.0;
    double z = P[f2.bias];
    for (int j = 0; j < h; ++j) z += hidden[j] * P[f2.weight + j];
    st.logit = z;
    if (keep) {
        st.flat = std::move(act);
        st.hidden = std::move(hidden);
    }
}

// Writes (not accumulates) this sample's gradient into g.
void backward_sample(const Cnn3dModel& model, const Geometry& geo, const ForwardCache::Sample& st, double dlogit,
                     AlignedVector& g) {
    const auto& a = model.architecture();
    const auto& P = model.params();
    const auto& sl = model.slices();
    const auto& f1 = sl[sl.size() - 2];
    const auto& f2 = sl.back();
    const int h = a.fc_hidden;

    AlignedVector dh(h);
    for (int j = 0; j < h; ++j) {
        g[f2.weight + j] = st.hidden[j] * dlogit;
        dh[j] = st.hidden[j] > 0.0 ? P[f2.weight + j] * dlogit : 0.0;
    }
    g[f2.bias] = dlogit;

    const auto nf = static_cast<Eigen::Index>(f1.weight_rows);
    const CMapVec flat(st.flat.data(), nf);
    const CMapVec dhv(dh.data(), h);
    MapMat(g.data() + f1.weight, nf, h).noalias() = flat * dhv.transpose();
    for (int j = 0; j < h; ++j) g[f1.bias + j] = dh[j];
    AlignedVector dact(static_cast<std::size_t>(nf));
    Eigen::Map<Eigen::VectorXd>(dact.data(), nf).noalias() =
        CMapMat(P.data() + f1.weight, nf, h) * dhv;

    RowMat col, dcol;
    for (std::size_t li = a.conv_channels.size(); li-- > 0;) {
        const int n = geo.edge_in[li];
        const int co = a.conv_channels[li];
        const int ci = li == 0 ? 1 : a.conv_channels[li - 1];
        const auto& out = st.conv_out[li];
        AlignedVector dz;
        if (geo.pooled[li]) {
            dz.assign(out.size(), 0.0);
            const auto& arg = st.pool_arg[li];
            for (std::size_t o = 0; o < arg.size(); ++o) dz[arg[o]] += dact[o];
        } else {
            dz = std::move(dact);
        }
        for (std::size_t i = 0; i < dz.size(); ++i)
            if (!(out[i] > 0.0)) dz[i] = 0.0;
        const auto v = static_cast<Eigen::Index>(cube(n));
        const CMapMat dzm(dz.data(), v, co);
        im2col(st.conv_in[li].data(), n, ci, col);
        MapMat(g.data() + sl[li].weight, static_cast<Eigen::Index>(sl[li].weight_rows), co).noalias() =
            col.transpose() * dzm;
        Eigen::Map<Eigen::RowVectorXd>(g.data() + sl[li].bias, co) = dzm.colwise().sum();
        if (li == 0) break;
        dcol.noalias() = dzm * CMapMat(P.data() + sl[li].weight, static_cast<Eigen::Index>(sl[li].weight_rows), co)
                                   .transpose();
        col2im(dcol, n, ci, dact);
    }
}

double clamp_prob(double p) { return std::clamp(p, kClampLo, kClampHi); }

} // namespace

CnnArchitecture CnnArchitecture::narrow(int patch_size) {
    CnnArchitecture a;
    a.patch_size = patch_size;
    a.conv_channels = {8, 8, 16, 16, 32};
    a.fc_hidden = 32;
    return a;
}

void CnnArchitecture::validate() const {
    if (patch_size < 1) throw InvalidArgument("CNN patch size must be positive");
    if (conv_channels.empty()) throw InvalidArgument("CNN needs at least one conv layer");
    for (int c : conv_channels)
        if (c < 1) throw InvalidArgument("CNN channel counts must be positive");
    for (int p : pool_after)
        if (p < 0 || p >= static_cast<int>(conv_channels.size()))
            throw InvalidArgument("CNN pool position out of range");
    if (fc_hidden < 1) throw InvalidArgument("CNN hidden width must be positive");
}

std::vector<int> CnnArchitecture::pooled_sizes() const {
    const Geometry g = geometry(*this);
    std::vector<int> out;
    for (std::size_t l = 0; l < g.pooled.size(); ++l)
        if (std::find(pool_after.begin(), pool_after.end(), static_cast<int>(l)) != pool_after.end())
            out.push_back(g.pooled[l] ? g.edge_in[l] / 2 : g.edge_in[l]);
    return out;
}

int CnnArchitecture::final_size() const {
    const Geometry g = geometry(*this);
    const int n = g.edge_in.back();
    return g.pooled.back() ? n / 2 : n;
}

std::size_t CnnArchitecture::flat_features() const { return cube(final_size()) * conv_channels.back(); }

std::size_t CnnArchitecture::parameter_count() const {
    std::size_t n = 0;
    int c = 1;
    for (int co : conv_channels) {
        n += 27 * static_cast<std::size_t>(c) * co + co;
        c = co;
    }
    n += flat_features() * fc_hidden + fc_hidden;
    n += static_cast<std::size_t>(fc_hidden) + 1;
    return n;
}

Cnn3dModel::Cnn3dModel(CnnArchitecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    std::size_t off = 0;
    auto pad = [](std::size_t o) { return (o + 7) / 8 * 8; };
    auto add = [&](std::size_t rows, std::size_t cols) {
        ParamSlice s{off, rows, cols, pad(off + rows * cols)};
        off = pad(s.bias + cols);
        slices_.push_back(s);
    };
    int c = 1;
    for (int co : arch_.conv_channels) {
        add(27 * static_cast<std::size_t>(c), co);
        c = co;
    }
    add(arch_.flat_features(), arch_.fc_hidden);
    add(arch_.fc_hidden, 1);
    params_.assign(off, 0.0);
}

Cnn3dModel Cnn3dModel::initialized(CnnArchitecture arch, std::uint64_t seed) {
    Cnn3dModel m(std::move(arch));
    for (std::size_t i = 0; i < m.slices_.size(); ++i) {
        const auto& s = m.slices_[i];
        Rng rng = make_stream(seed, "cnn.init", {i});
        std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / static_cast<double>(s.weight_rows)));
        for (std::size_t k = 0; k < s.weight_rows * s.weight_cols; ++k) m.params_[s.weight + k] = nd(rng);
    }
    return m;
}

std::size_t Cnn3dModel::voxels_per_patch() const noexcept { return cube(arch_.patch_size); }

std::vector<double> forward_logits(const Cnn3dModel& model, const Tensor& batch, int workers) {
    std::size_t n = 0;
    if (patch_edge(batch, n) != model.patch_size())
        throw InvalidArgument("forward: patch size does not match the model");
    const Geometry geo = geometry(model.architecture());
    std::vector<double> out(n);
    const std::size_t v = model.voxels_per_patch();
    parallel_for(n, workers, [&](std::size_t i) {
        ForwardCache::Sample st;
        forward_sample(model, geo, batch.data.data() + i * v, st, false);
        out[i] = st.logit;
    });
    return out;
}

std::vector<double> forward(const Cnn3dModel& model, const Tensor& batch, ForwardCache* cache, int workers) {
    if (!cache) {
        auto z = forward_logits(model, batch, workers);
        for (double& v : z) v = sigmoid(v);
        return z;
    }
    std::size_t n = 0;
    if (patch_edge(batch, n) != model.patch_size())
        throw InvalidArgument("forward: patch size does not match the model");
    const Geometry geo = geometry(model.architecture());
    cache->samples.assign(n, {});
    std::vector<double> out(n);
    const std::size_t v = model.voxels_per_patch();
    parallel_for(n, workers, [&](std::size_t i) {
        forward_sample(model, geo, batch.data.data() + i * v, cache->samples[i], true);
        out[i] = sigmoid(cache->samples[i].logit);
    });
    return out;
}

double bce_sum(const std::vector<double>& probs, const std::vector<double>& labels) {
    if (probs.size() != labels.size()) throw InvalidArgument("bce: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = clamp_prob(probs[i]);
        s -= labels[i] * std::log(p) + (1.0 - labels[i]) * std::log(1.0 - p);
    }
    return s;
}

std::vector<double> backward(const Cnn3dModel& model, const ForwardCache& cache, const std::vector<double>& labels) {
    if (cache.empty()) throw InvalidArgument("backward: no cached forward state");
    if (cache.samples.size() != labels.size()) throw InvalidArgument("backward: label count does not match batch");
    if (cache.samples.front().conv_out.size() != model.architecture().conv_channels.size())
        throw InvalidArgument("backward: cache was produced by a different model");
    const Geometry geo = geometry(model.architecture());
    const std::size_t np = model.params().size();
    std::vector<double> total(np, 0.0);
    AlignedVector g(np);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const double p = sigmoid(cache.samples[i].logit);
        // The clamped loss is flat where the clamp is active.
        const double dlogit = (p < kClampLo || p > kClampHi) ? 0.0 : p - labels[i];
        backward_sample(model, geo, cache.samples[i], dlogit, g);
        for (std::size_t k = 0; k < np; ++k) total[k] += g[k];
    }
    return total;
}

namespace detail {

// Fused forward/backward for training: per-sample gradients are summed
// within fixed chunks, and chunk sums are added in order, so the result
// does not depend on the worker count.
double batch_gradient(const Cnn3dModel& model, const double* patches, const double* labels, std::size_t n,
                      int workers, std::vector<double>& grad) {
    const Geometry geo = geometry(model.architecture());
    const std::size_t np = model.params().size();
    const std::size_t v = model.voxels_per_patch();
    const std::size_t chunks = (n + kChunk - 1) / kChunk;
    std::vector<AlignedVector> acc(chunks);
    std::vector<double> loss(n);
    parallel_for(chunks, workers, [&](std::size_t c) {
        acc[c].assign(np, 0.0);
        AlignedVector g(np);
        for (std::size_t i = c * kChunk; i < std::min(n, (c + 1) * kChunk); ++i) {
            ForwardCache::Sample st;
            forward_sample(model, geo, patches + i * v, st, true);
            const double p = sigmoid(st.logit);
            const double pc = clamp_prob(p);
            loss[i] = -(labels[i] * std::log(pc) + (1.0 - labels[i]) * std::log(1.0 - pc));
            const double dlogit = (p < kClampLo || p > kClampHi) ? 0.0 : p - labels[i];
            backward_sample(model, geo, st, dlogit, g);
            for (std::size_t k = 0; k < np; ++k) acc[c][k] += g[k];
        }
    });
    grad.assign(np, 0.0);
    for (const auto& a : acc)
        for (std::size_t k = 0; k < np; ++k) grad[k] += a[k];
    double s = 0.0;
    for (double l : loss) s += l;
    return s;
}

} // namespace detail

void save_model(const Cnn3dModel& model, const std::string& path) {
    const auto& a = model.architecture();
    nlohmann::json h = {{"format", "livseg.cnn3d"},
                        {"version", 1},
                        {"patch_size", a.patch_size},
                        {"conv_channels", a.conv_channels},
                        {"pool_after", a.pool_after},
                        {"fc_hidden", a.fc_hidden},
                        {"stored_values", model.params().size()},
                        {"dtype", "f64le"}};
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path + " for writing");
    f << h.dump() << '\n';
    for (double v : model.params()) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, 8);
        unsigned char b[8];
        for (int k = 0; k < 8; ++k) b[k] = static_cast<unsigned char>(bits >> (8 * k));
        f.write(reinterpret_cast<const char*>(b), 8);
    }
    if (!f) throw Error("failed writing " + path);
}

Cnn3dModel load_model(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw FormatError(path + ": missing model header");
    nlohmann::json h;
    try {
        h = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad model header: " + e.what());
    }
    if (h.value("format", "") != "livseg.cnn3d" || h.value("version", 0) != 1)
        throw FormatError(path + ": not a version-1 CNN model");
    if (h.value("dtype", "") != "f64le") throw FormatError(path + ": unsupported weight encoding");
    CnnArchitecture a;
    try {
        a.patch_size = h.at("patch_size").get<int>();
        a.conv_channels = h.at("conv_channels").get<std::vector<int>>();
        a.pool_after = h.at("pool_after").get<std::vector<int>>();
        a.fc_hidden = h.at("fc_hidden").get<int>();
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(path + ": bad model header: " + e.what());
    }
    Cnn3dModel m(a);
    if (h.value("stored_values", std::size_t{0}) != m.params().size())
        throw FormatError(path + ": weight count does not match architecture");
    for (double& v : m.params()) {
        unsigned char b[8];
        if (!f.read(reinterpret_cast<char*>(b), 8)) throw FormatError(path + ": truncated weight blob");
        std::uint64_t bits = 0;
        for (int k = 0; k < 8; ++k) bits |= static_cast<std::uint64_t>(b[k]) << (8 * k);
        std::memcpy(&v, &bits, 8);
    }
    if (f.peek() != std::char_traits<char>::eof()) throw FormatError(path + ": trailing bytes after weights");
    return m;
}

} // namespace livseg::neural
