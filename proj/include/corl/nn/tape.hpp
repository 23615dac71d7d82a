#pragma once

#include <functional>
#include <vector>

#include "corl/nn/params.hpp"

namespace corl::nn {

/// Reverse-mode autodiff tape over dense double matrices. Every operation
/// appends a node; backward() walks the tape in reverse and accumulates
/// gradients into leaves. Parameters bound via param() collect their
/// gradients by name; frozen parameters participate in the forward pass but
/// receive no gradient.
class Tape {
public:
    int constant(Mat v);
    /// Differentiable non-parameter leaf (its gradient is readable after backward).
    int leaf(Mat v);
    /// Binds a named tensor from `ps`. trainable=false freezes it.
    int param(const ParamSet& ps, const std::string& name, bool trainable = true);

    int matmul(int a, int b);
    int add(int a, int b);
    int sub(int a, int b);
    int cmul(int a, int b);
    int scale(int a, double s);
    /// x + row broadcast over rows of x (bias add).
    int add_rowvec(int x, int r);
    /// x * row, broadcast elementwise over rows.
    int mul_rowvec(int x, int r);
    int tanh_op(int a);
    int gelu(int a);
    int sum_all(int a);
    int mean_all(int a);
    /// Elementwise max with a constant matrix; subgradient goes to `a` where
    /// a >= c and nowhere otherwise.
    int max_with_const(int a, Mat c);
    int select_rows(int a, std::vector<int> rows);
    int vstack(const std::vector<int>& parts);
    int tile_rows(int a, int times);
    /// (B x h*A) -> (B*h x A), row-major within each row.
    int chunk_rows(int a, int h, int A);
    /// Batched single-head scaled dot-product attention over B sequences of
    /// T tokens stored row-contiguously: inputs are (B*T x w). Upper-diagonal
    /// positions are masked when causal.
    int attention(int q, int k, int v, int T, bool causal);

    const Mat& val(int id) const { return nodes_[id].v; }
    const Mat& grad(int id) const;

    /// Reverse pass from a scalar (1x1) loss node.
    void backward(int loss);

    /// Gradients of all trainable parameters bound from `ps`.
    Gradients param_grads(const ParamSet& ps) const;

    double scalar(int id) const { return nodes_[id].v(0, 0); }

private:
    struct Node {
        Mat v;
        Mat g;
        bool needs_grad = false;
        bool grad_live = false;  // g allocated and touched
        std::function<void(Tape&)> back;
    };
    struct ParamRef {
        const ParamSet* ps;
        std::string name;
        int node;
    };

    int push(Mat v, bool needs_grad, std::function<void(Tape&)> back = nullptr);
    void touch_grad(int id);
    void add_grad(int id, const Mat& g);

    std::vector<Node> nodes_;
    std::vector<ParamRef> param_refs_;
    bool ran_backward_ = false;

    friend struct TapeOps;
};

}  // namespace corl::nn
