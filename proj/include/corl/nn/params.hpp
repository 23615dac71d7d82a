#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "corl/errors.hpp"
#include "corl/rng.hpp"

namespace corl::nn {

using Mat = Eigen::MatrixXd;

/// Named real tensors with immutable shapes. Insertion order is preserved so
/// flattening, checksums and serialization are deterministic.
class ParamSet {
public:
    void add(const std::string& name, Mat value);
    bool has(const std::string& name) const { return tensors_.count(name) > 0; }
    Mat& at(const std::string& name);
    const Mat& at(const std::string& name) const;

    const std::vector<std::string>& names() const { return order_; }
    std::size_t size() const { return order_.size(); }

    std::size_t num_scalars() const;
    Eigen::VectorXd flat() const;
    void set_flat(const Eigen::VectorXd& v);

    bool all_finite() const;
    bool same_layout(const ParamSet& other) const;

    /// FNV-1a over names, shapes and raw payload bytes.
    std::uint64_t checksum() const;

private:
    std::vector<std::string> order_;
    std::map<std::string, Mat> tensors_;
};

/// Gradient container, shape-congruent with a ParamSet. Missing names read
/// as zero.
class Gradients {
public:
    void accumulate(const std::string& name, const Mat& g);
    bool has(const std::string& name) const { return grads_.count(name) > 0; }
    const Mat& at(const std::string& name) const;
    Mat get_or_zero(const std::string& name, Eigen::Index rows, Eigen::Index cols) const;

    /// Throws TrainingAbort naming the first parameter with a NaN/Inf entry.
    void check_finite() const;

    void scale_all(double s);

private:
    std::map<std::string, Mat> grads_;
};

/// Adaptive moment estimation with bias correction (beta1=0.9, beta2=0.999,
/// eps=1e-8). Rejects non-finite gradients before mutating anything.
class AdamState {
public:
    explicit AdamState(const ParamSet& params);
    void step(ParamSet& params, const Gradients& grads, double lr);
    long t() const { return t_; }

private:
    std::map<std::string, Mat> m_, v_;
    long t_ = 0;
};

/// target <- (1 - tau) * target + tau * online, elementwise.
void ema_update(ParamSet& target, const ParamSet& online, double tau);

/// Uniform Xavier/Glorot initialization for a (rows x cols) weight matrix.
Mat glorot(Eigen::Index rows, Eigen::Index cols, RngStream& rng);

void save_checkpoint(const std::string& path, const ParamSet& params, const std::string& config_text);
ParamSet load_checkpoint(const std::string& path, std::string* config_text_out = nullptr);

}  // namespace corl::nn
