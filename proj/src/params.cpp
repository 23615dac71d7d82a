#include "corl/nn/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

namespace corl::nn {

void ParamSet::add(const std::string& name, Mat value) {
    if (has(name)) throw ShapeError(name, "duplicate parameter name");
    order_.push_back(name);
    tensors_.emplace(name, std::move(value));
}

Mat& ParamSet::at(const std::string& name) {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ShapeError(name, "no such parameter");
    return it->second;
}

const Mat& ParamSet::at(const std::string& name) const {
    auto it = tensors_.find(name);
    if (it == tensors_.end()) throw ShapeError(name, "no such parameter");
    return it->second;
}

std::size_t ParamSet::num_scalars() const {
    std::size_t n = 0;
    for (const auto& name : order_) n += tensors_.at(name).size();
    return n;
}

Eigen::VectorXd ParamSet::flat() const {
    Eigen::VectorXd v(num_scalars());
    Eigen::Index k = 0;
    for (const auto& name : order_) {
        const Mat& m = tensors_.at(name);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) v[k++] = m(i, j);
    }
    return v;
}

void ParamSet::set_flat(const Eigen::VectorXd& v) {
    if (static_cast<std::size_t>(v.size()) != num_scalars())
        throw ShapeError("ParamSet", "flat vector size mismatch");
    Eigen::Index k = 0;
    for (const auto& name : order_) {
        Mat& m = tensors_.at(name);
        for (Eigen::Index j = 0; j < m.cols(); ++j)
            for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = v[k++];
    }
}

bool ParamSet::all_finite() const {
    for (const auto& name : order_)
        if (!tensors_.at(name).allFinite()) return false;
    return true;
}

bool ParamSet::same_layout(const ParamSet& other) const {
    if (order_ != other.order_) return false;
    for (const auto& name : order_) {
        const Mat& a = tensors_.at(name);
        const Mat& b = other.tensors_.at(name);
        if (a.rows() != b.rows() || a.cols() != b.cols()) return false;
    }
    return true;
}

std::uint64_t ParamSet::checksum() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const void* data, std::size_t n) {
        const unsigned char* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            h ^= p[i];
            h *= 1099511628211ULL;
        }
    };
    for (const auto& name : order_) {
        mix(name.data(), name.size());
        const Mat& m = tensors_.at(name);
        std::int64_t shape[2] = {m.rows(), m.cols()};
        mix(shape, sizeof(shape));
        mix(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    }
    return h;
}

void Gradients::accumulate(const std::string& name, const Mat& g) {
    auto it = grads_.find(name);
    if (it == grads_.end()) {
        grads_.emplace(name, g);
    } else {
        if (it->second.rows() != g.rows() || it->second.cols() != g.cols())
            throw ShapeError(name, "gradient shape mismatch");
        it->second += g;
    }
}

const Mat& Gradients::at(const std::string& name) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) throw ShapeError(name, "no gradient recorded");
    return it->second;
}

Mat Gradients::get_or_zero(const std::string& name, Eigen::Index rows, Eigen::Index cols) const {
    auto it = grads_.find(name);
    if (it == grads_.end()) return Mat::Zero(rows, cols);
    return it->second;
}

void Gradients::check_finite() const {
    for (const auto& [name, g] : grads_)
        if (!g.allFinite()) throw TrainingAbort("non-finite gradient in parameter " + name);
}

void Gradients::scale_all(double s) {
    for (auto& [name, g] : grads_) g *= s;
}

AdamState::AdamState(const ParamSet& params) {
    for (const auto& name : params.names()) {
        const Mat& p = params.at(name);
        m_.emplace(name, Mat::Zero(p.rows(), p.cols()));
        v_.emplace(name, Mat::Zero(p.rows(), p.cols()));
    }
}

void AdamState::step(ParamSet& params, const Gradients& grads, double lr) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    grads.check_finite();
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
    for (const auto& name : params.names()) {
        Mat& p = params.at(name);
        Mat g = grads.get_or_zero(name, p.rows(), p.cols());
        if (g.rows() != p.rows() || g.cols() != p.cols())
            throw ShapeError(name, "gradient/parameter shape mismatch");
        Mat& m = m_.at(name);
        Mat& v = v_.at(name);
        m = beta1 * m + (1.0 - beta1) * g;
        v = beta2 * v.array().matrix() + (1.0 - beta2) * g.array().square().matrix();
        Mat mhat = m / bc1;
        Mat vhat = v / bc2;
        p.array() -= lr * mhat.array() / (vhat.array().sqrt() + eps);
    }
}

void ema_update(ParamSet& target, const ParamSet& online, double tau) {
    if (!target.same_layout(online)) throw ShapeError("ema_update", "parameter layout mismatch");
    if (tau < 0.0 || tau > 1.0) throw ShapeError("ema_update", "tau must be in [0,1]");
    for (const auto& name : target.names())
        target.at(name) = (1.0 - tau) * target.at(name) + tau * online.at(name);
}

Mat glorot(Eigen::Index rows, Eigen::Index cols, RngStream& rng) {
    const double r = std::sqrt(6.0 / static_cast<double>(rows + cols));
    Mat m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
        for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = rng.uniform(-r, r);
    return m;
}

namespace {
constexpr char kMagic[8] = {'C', 'O', 'R', 'L', 'C', 'K', 'P', '1'};

std::uint64_t fnv64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (char c : s) {
        h ^= static_cast<std::uint64_t>(static_cast<unsigned char>(c));
        h *= 1099511628211ULL;
    }
    return h;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is) throw DataError(DataError::Kind::CorruptRecord, "truncated checkpoint");
    return v;
}
}  // namespace

void save_checkpoint(const std::string& path, const ParamSet& params, const std::string& config_text) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw DataError(DataError::Kind::Io, "cannot open checkpoint for writing: " + path);
    os.write(kMagic, sizeof(kMagic));
    write_pod(os, fnv64(config_text));
    write_pod(os, static_cast<std::uint64_t>(config_text.size()));
    os.write(config_text.data(), static_cast<std::streamsize>(config_text.size()));
    write_pod(os, static_cast<std::uint64_t>(params.size()));
    for (const auto& name : params.names()) {
        const Mat& m = params.at(name);
        write_pod(os, static_cast<std::uint64_t>(name.size()));
        os.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod(os, static_cast<std::int64_t>(m.rows()));
        write_pod(os, static_cast<std::int64_t>(m.cols()));
        os.write(reinterpret_cast<const char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
    }
    write_pod(os, params.checksum());
    if (!os) throw DataError(DataError::Kind::Io, "checkpoint write failure: " + path);
}

ParamSet load_checkpoint(const std::string& path, std::string* config_text_out) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw DataError(DataError::Kind::Io, "cannot open checkpoint: " + path);
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw DataError(DataError::Kind::VersionMismatch, "not a checkpoint file (bad magic): " + path);
    const std::uint64_t stored_hash = read_pod<std::uint64_t>(is);
    const std::uint64_t cfg_len = read_pod<std::uint64_t>(is);
    std::string cfg(cfg_len, '\0');
    is.read(cfg.data(), static_cast<std::streamsize>(cfg_len));
    if (!is) throw DataError(DataError::Kind::CorruptRecord, "truncated checkpoint config");
    if (fnv64(cfg) != stored_hash)
        throw DataError(DataError::Kind::CorruptRecord, "checkpoint config hash mismatch: " + path);
    if (config_text_out) *config_text_out = cfg;

    ParamSet p;
    const std::uint64_t count = read_pod<std::uint64_t>(is);
    for (std::uint64_t i = 0; i < count; ++i) {
        const std::uint64_t name_len = read_pod<std::uint64_t>(is);
        std::string name(name_len, '\0');
        is.read(name.data(), static_cast<std::streamsize>(name_len));
        const auto rows = read_pod<std::int64_t>(is);
        const auto cols = read_pod<std::int64_t>(is);
        if (!is || rows < 0 || cols < 0)
            throw DataError(DataError::Kind::CorruptRecord, "corrupt tensor header in checkpoint");
        Mat m(rows, cols);
        is.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(sizeof(double) * m.size()));
        if (!is) throw DataError(DataError::Kind::CorruptRecord, "truncated tensor payload: " + name);
        p.add(name, std::move(m));
    }
    const std::uint64_t stored_sum = read_pod<std::uint64_t>(is);
    if (!is || stored_sum != p.checksum())
        throw DataError(DataError::Kind::CorruptRecord, "checkpoint payload checksum mismatch: " + path);
    return p;
}

}  // namespace corl::nn
