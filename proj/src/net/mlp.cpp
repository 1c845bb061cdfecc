#include "ugrasp/net/mlp.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "ugrasp/rng.hpp"

namespace ugrasp::net {

namespace {

std::vector<int> layer_dims(const MlpArchitecture& arch) {
    std::vector<int> dims;
    dims.push_back(arch.input_dim);
    for (int h : arch.hidden) dims.push_back(h);
    dims.push_back(arch.head_count);
    return dims;
}

void check_arch(const MlpArchitecture& arch) {
    if (arch.input_dim <= 0 || arch.head_count <= 0)
        throw std::invalid_argument("bad architecture dims");
    for (int h : arch.hidden)
        if (h <= 0) throw std::invalid_argument("bad hidden dim");
    if (arch.input_scale.size() != 0 && arch.input_scale.size() != arch.input_dim)
        throw std::invalid_argument("input_scale length mismatch");
}

}  // namespace

size_t MlpParams::parameter_count() const {
    size_t n = 0;
    for (const auto& w : weights) n += static_cast<size_t>(w.size());
    for (const auto& b : biases) n += static_cast<size_t>(b.size());
    return n;
}

bool MlpParams::all_finite() const {
    for (const auto& w : weights)
        if (!w.allFinite()) return false;
    for (const auto& b : biases)
        if (!b.allFinite()) return false;
    return true;
}

Eigen::MatrixXd forward(const MlpParams& p, const Eigen::MatrixXd& X, ForwardTrace* trace) {
    if (X.cols() != p.arch.input_dim) throw std::invalid_argument("input width mismatch");
    const size_t n_layers = p.weights.size();

    Eigen::MatrixXd a;
    if (p.arch.input_scale.size() > 0)
        a = X.array().rowwise() * p.arch.input_scale.transpose().array();
    else
        a = X;

    if (trace) {
        trace->activations.clear();
        trace->activations.reserve(n_layers);
        trace->activations.push_back(a);
    }

    for (size_t l = 0; l < n_layers; ++l) {
        Eigen::MatrixXd z = a * p.weights[l].transpose();
        z.rowwise() += p.biases[l].transpose();
        if (l + 1 < n_layers) {
            a = z.array().tanh();
            if (trace) trace->activations.push_back(a);
        } else {
            a = std::move(z);  // linear heads
        }
    }
    return a;
}

Eigen::VectorXd forward_one(const MlpParams& p, const Eigen::VectorXd& x) {
    return forward(p, x.transpose()).row(0);
}

bool GradientBundle::all_finite() const {
    for (const auto& w : d_weights)
        if (!w.allFinite()) return false;
    for (const auto& b : d_biases)
        if (!b.allFinite()) return false;
    return true;
}

void GradientBundle::accumulate(const GradientBundle& o, double factor) {
    for (size_t l = 0; l < d_weights.size(); ++l) {
        d_weights[l] += factor * o.d_weights[l];
        d_biases[l] += factor * o.d_biases[l];
    }
    loss += factor * o.loss;
}

void GradientBundle::scale(double factor) {
    for (auto& w : d_weights) w *= factor;
    for (auto& b : d_biases) b *= factor;
    loss *= factor;
}

GradientBundle zero_gradients(const MlpParams& p) {
    GradientBundle g;
    g.d_weights.reserve(p.weights.size());
    g.d_biases.reserve(p.biases.size());
    for (const auto& w : p.weights) g.d_weights.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    for (const auto& b : p.biases) g.d_biases.push_back(Eigen::VectorXd::Zero(b.size()));
    return g;
}

GradientBundle backward(const MlpParams& p, const ForwardTrace& trace, const Eigen::MatrixXd& dY) {
    const size_t n_layers = p.weights.size();
    if (trace.activations.size() != n_layers)
        throw std::invalid_argument("trace does not match architecture");
    if (dY.cols() != p.arch.head_count) throw std::invalid_argument("dY width mismatch");

    GradientBundle g;
    g.d_weights.resize(n_layers);
    g.d_biases.resize(n_layers);

    Eigen::MatrixXd delta = dY;  // gradient wrt layer pre-activation (heads are linear)
    for (size_t l = n_layers; l-- > 0;) {
        g.d_weights[l] = delta.transpose() * trace.activations[l];
        g.d_biases[l] = delta.colwise().sum();
        Eigen::MatrixXd da = delta * p.weights[l];
        if (l > 0) {
            // tanh'(z) from the stored post-activation: 1 - a^2
            delta = da.array() * (1.0 - trace.activations[l].array().square());
        } else {
            if (p.arch.input_scale.size() > 0)
                g.d_input = da.array().rowwise() * p.arch.input_scale.transpose().array();
            else
                g.d_input = std::move(da);
        }
    }
    return g;
}

GradientBundle backward_one(const MlpParams& p, const Eigen::VectorXd& x, const Eigen::VectorXd& dy) {
    ForwardTrace trace;
    forward(p, x.transpose(), &trace);
    return backward(p, trace, dy.transpose());
}

MlpParams init_params(uint64_t seed, const MlpArchitecture& arch) {
    check_arch(arch);
    MlpParams p;
    p.arch = arch;
    const auto dims = layer_dims(arch);
    rng::Stream rs(seed, "mlp-init");
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        const int fan_in = dims[l];
        const int fan_out = dims[l + 1];
        const double bound = std::sqrt(6.0 / fan_in);
        Eigen::MatrixXd w(fan_out, fan_in);
        for (int r = 0; r < fan_out; ++r)
            for (int c = 0; c < fan_in; ++c) w(r, c) = rs.uniform(-bound, bound);
        p.weights.push_back(std::move(w));
        p.biases.push_back(Eigen::VectorXd::Zero(fan_out));
    }
    return p;
}

AdamState make_adam_state(const MlpParams& p) {
    AdamState s;
    for (const auto& w : p.weights) {
        s.m_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
        s.v_w.push_back(Eigen::MatrixXd::Zero(w.rows(), w.cols()));
    }
    for (const auto& b : p.biases) {
        s.m_b.push_back(Eigen::VectorXd::Zero(b.size()));
        s.v_b.push_back(Eigen::VectorXd::Zero(b.size()));
    }
    return s;
}

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

void adam_step_inplace(MlpParams& p, AdamState& s, const GradientBundle& g, double lr) {
    if (!g.all_finite()) throw std::runtime_error("diverged");
    s.step += 1;
    const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(s.step));
    for (size_t l = 0; l < p.weights.size(); ++l) {
        s.m_w[l] = kBeta1 * s.m_w[l] + (1.0 - kBeta1) * g.d_weights[l];
        s.v_w[l] = kBeta2 * s.v_w[l].array() + (1.0 - kBeta2) * g.d_weights[l].array().square();
        p.weights[l].array() -=
            lr * (s.m_w[l].array() / bc1) / ((s.v_w[l].array() / bc2).sqrt() + kEps);

        s.m_b[l] = kBeta1 * s.m_b[l] + (1.0 - kBeta1) * g.d_biases[l];
        s.v_b[l] = kBeta2 * s.v_b[l].array() + (1.0 - kBeta2) * g.d_biases[l].array().square();
        p.biases[l].array() -=
            lr * (s.m_b[l].array() / bc1) / ((s.v_b[l].array() / bc2).sqrt() + kEps);
    }
}

std::pair<MlpParams, AdamState> adam_step(const MlpParams& p, const AdamState& s,
                                          const GradientBundle& g, double lr) {
    MlpParams p2 = p;
    AdamState s2 = s;
    adam_step_inplace(p2, s2, g, lr);
    return {std::move(p2), std::move(s2)};
}

namespace {

constexpr char kMagic[8] = {'U', 'G', 'N', 'E', 'T', 'C', 'P', '1'};

void write_u32(std::ostream& f, uint32_t v) { f.write(reinterpret_cast<const char*>(&v), 4); }
uint32_t read_u32(std::istream& f) {
    uint32_t v = 0;
    f.read(reinterpret_cast<char*>(&v), 4);
    return v;
}

void write_doubles(std::ostream& f, const double* d, size_t n) {
    f.write(reinterpret_cast<const char*>(d), static_cast<std::streamsize>(n * sizeof(double)));
}
void read_doubles(std::istream& f, double* d, size_t n) {
    f.read(reinterpret_cast<char*>(d), static_cast<std::streamsize>(n * sizeof(double)));
}

}  // namespace

void save_params(const MlpParams& p, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(kMagic, 8);
    write_u32(f, static_cast<uint32_t>(p.arch.input_dim));
    write_u32(f, static_cast<uint32_t>(p.arch.head_count));
    write_u32(f, static_cast<uint32_t>(p.arch.hidden.size()));
    for (int h : p.arch.hidden) write_u32(f, static_cast<uint32_t>(h));
    write_u32(f, p.arch.input_scale.size() > 0 ? 1u : 0u);
    if (p.arch.input_scale.size() > 0)
        write_doubles(f, p.arch.input_scale.data(), static_cast<size_t>(p.arch.input_scale.size()));
    for (size_t l = 0; l < p.weights.size(); ++l) {
        // row-major write order, independent of Eigen's storage layout
        for (Eigen::Index r = 0; r < p.weights[l].rows(); ++r)
            for (Eigen::Index c = 0; c < p.weights[l].cols(); ++c) {
                const double v = p.weights[l](r, c);
                write_doubles(f, &v, 1);
            }
        write_doubles(f, p.biases[l].data(), static_cast<size_t>(p.biases[l].size()));
    }

    std::ofstream manifest(path + ".manifest");
    if (!manifest) throw std::runtime_error("cannot write " + path + ".manifest");
    manifest << "format ugnetcp v1\n";
    manifest << "input_dim " << p.arch.input_dim << "\n";
    manifest << "hidden";
    for (int h : p.arch.hidden) manifest << " " << h;
    manifest << "\nhead_count " << p.arch.head_count << "\n";
    manifest << "parameters " << p.parameter_count() << "\n";
}

MlpParams load_params(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path);
    char magic[8];
    f.read(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw std::runtime_error("bad checkpoint magic");

    MlpArchitecture arch;
    arch.input_dim = static_cast<int>(read_u32(f));
    arch.head_count = static_cast<int>(read_u32(f));
    const uint32_t n_hidden = read_u32(f);
    for (uint32_t i = 0; i < n_hidden; ++i) arch.hidden.push_back(static_cast<int>(read_u32(f)));
    if (read_u32(f)) {
        arch.input_scale.resize(arch.input_dim);
        read_doubles(f, arch.input_scale.data(), static_cast<size_t>(arch.input_dim));
    }

    MlpParams p;
    p.arch = arch;
    std::vector<int> dims;
    dims.push_back(arch.input_dim);
    for (int h : arch.hidden) dims.push_back(h);
    dims.push_back(arch.head_count);
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
        Eigen::MatrixXd w(dims[l + 1], dims[l]);
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) read_doubles(f, &w(r, c), 1);
        Eigen::VectorXd b(dims[l + 1]);
        read_doubles(f, b.data(), static_cast<size_t>(b.size()));
        p.weights.push_back(std::move(w));
        p.biases.push_back(std::move(b));
    }
    if (!f) throw std::runtime_error("truncated checkpoint " + path);
    return p;
}

}  // namespace ugrasp::net
