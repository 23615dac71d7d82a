#include "corl/nn/tape.hpp"

#include <cmath>
#include <limits>
#include <memory>

namespace corl::nn {

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}  // namespace

int Tape::push(Mat v, bool needs_grad, std::function<void(Tape&)> back) {
    Node n;
    n.v = std::move(v);
    n.needs_grad = needs_grad;
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

void Tape::touch_grad(int id) {
    Node& n = nodes_[id];
    if (!n.grad_live) {
        n.g = Mat::Zero(n.v.rows(), n.v.cols());
        n.grad_live = true;
    }
}

void Tape::add_grad(int id, const Mat& g) {
    if (!nodes_[id].needs_grad) return;
    touch_grad(id);
    nodes_[id].g += g;
}

const Mat& Tape::grad(int id) const {
    const Node& n = nodes_[id];
    if (!n.grad_live) {
        static const Mat empty;
        if (!ran_backward_) throw ShapeError("Tape", "grad() before backward()");
        // Node never received gradient: report zeros of matching shape.
        const_cast<Node&>(n).g = Mat::Zero(n.v.rows(), n.v.cols());
        const_cast<Node&>(n).grad_live = true;
        (void)empty;
    }
    return n.g;
}

int Tape::constant(Mat v) { return push(std::move(v), false); }

int Tape::leaf(Mat v) { return push(std::move(v), true); }

int Tape::param(const ParamSet& ps, const std::string& name, bool trainable) {
    int id = push(ps.at(name), trainable);
    if (trainable) param_refs_.push_back({&ps, name, id});
    return id;
}

int Tape::matmul(int a, int b) {
    const Mat& A = nodes_[a].v;
    const Mat& B = nodes_[b].v;
    if (A.cols() != B.rows()) throw ShapeError("matmul", "inner dimension mismatch");
    bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
    int out = push(A * B, ng);
    nodes_[out].back = [a, b, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        if (t.nodes_[a].needs_grad) t.add_grad(a, G * t.nodes_[b].v.transpose());
        if (t.nodes_[b].needs_grad) t.add_grad(b, t.nodes_[a].v.transpose() * G);
    };
    return out;
}

int Tape::add(int a, int b) {
    const Mat& A = nodes_[a].v;
    const Mat& B = nodes_[b].v;
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeError("add", "shape mismatch");
    bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
    int out = push(A + B, ng);
    nodes_[out].back = [a, b, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        t.add_grad(a, G);
        t.add_grad(b, G);
    };
    return out;
}

int Tape::sub(int a, int b) {
    const Mat& A = nodes_[a].v;
    const Mat& B = nodes_[b].v;
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeError("sub", "shape mismatch");
    bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
    int out = push(A - B, ng);
    nodes_[out].back = [a, b, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        t.add_grad(a, G);
        t.add_grad(b, -G);
    };
    return out;
}

int Tape::cmul(int a, int b) {
    const Mat& A = nodes_[a].v;
    const Mat& B = nodes_[b].v;
    if (A.rows() != B.rows() || A.cols() != B.cols()) throw ShapeError("cmul", "shape mismatch");
    bool ng = nodes_[a].needs_grad || nodes_[b].needs_grad;
    int out = push(A.cwiseProduct(B), ng);
    nodes_[out].back = [a, b, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        t.add_grad(a, G.cwiseProduct(t.nodes_[b].v));
        t.add_grad(b, G.cwiseProduct(t.nodes_[a].v));
    };
    return out;
}

int Tape::scale(int a, double s) {
    int out = push(nodes_[a].v * s, nodes_[a].needs_grad);
    nodes_[out].back = [a, s, out](Tape& t) { t.add_grad(a, t.nodes_[out].g * s); };
    return out;
}

int Tape::add_rowvec(int x, int r) {
    const Mat& X = nodes_[x].v;
    const Mat& R = nodes_[r].v;
    if (R.rows() != 1 || R.cols() != X.cols()) throw ShapeError("add_rowvec", "row vector shape mismatch");
    bool ng = nodes_[x].needs_grad || nodes_[r].needs_grad;
    Mat v = X;
    v.rowwise() += R.row(0);
    int out = push(std::move(v), ng);
    nodes_[out].back = [x, r, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        t.add_grad(x, G);
        if (t.nodes_[r].needs_grad) t.add_grad(r, G.colwise().sum());
    };
    return out;
}

int Tape::mul_rowvec(int x, int r) {
    const Mat& X = nodes_[x].v;
    const Mat& R = nodes_[r].v;
    if (R.rows() != 1 || R.cols() != X.cols()) throw ShapeError("mul_rowvec", "row vector shape mismatch");
    bool ng = nodes_[x].needs_grad || nodes_[r].needs_grad;
    Mat v = X.array().rowwise() * R.row(0).array();
    int out = push(std::move(v), ng);
    nodes_[out].back = [x, r, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        t.add_grad(x, G.array().rowwise() * t.nodes_[r].v.row(0).array());
        if (t.nodes_[r].needs_grad)
            t.add_grad(r, (G.array() * t.nodes_[x].v.array()).colwise().sum().matrix());
    };
    return out;
}

int Tape::tanh_op(int a) {
    Mat v = nodes_[a].v.array().tanh();
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, out](Tape& t) {
        const Mat& Y = t.nodes_[out].v;
        t.add_grad(a, t.nodes_[out].g.array() * (1.0 - Y.array().square()));
    };
    return out;
}

int Tape::gelu(int a) {
    const Mat& X = nodes_[a].v;
    auto erf_half = [](double x) { return std::erf(x * kInvSqrt2); };
    Mat v = 0.5 * X.array() * (1.0 + X.unaryExpr(erf_half).array());
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, out, erf_half](Tape& t) {
        const auto& X = t.nodes_[a].v.array();
        Mat d = 0.5 * (1.0 + t.nodes_[a].v.unaryExpr(erf_half).array()) +
                X * (-0.5 * X.square()).exp() * kInvSqrt2Pi;
        t.add_grad(a, t.nodes_[out].g.cwiseProduct(d));
    };
    return out;
}

int Tape::sum_all(int a) {
    Mat v(1, 1);
    v(0, 0) = nodes_[a].v.sum();
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, out](Tape& t) {
        const Mat& A = t.nodes_[a].v;
        t.add_grad(a, Mat::Constant(A.rows(), A.cols(), t.nodes_[out].g(0, 0)));
    };
    return out;
}

int Tape::mean_all(int a) {
    const double n = static_cast<double>(nodes_[a].v.size());
    return scale(sum_all(a), 1.0 / n);
}

int Tape::max_with_const(int a, Mat c) {
    const Mat& A = nodes_[a].v;
    if (A.rows() != c.rows() || A.cols() != c.cols()) throw ShapeError("max_with_const", "shape mismatch");
    Mat v = A.cwiseMax(c);
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, out, c = std::move(c)](Tape& t) {
        const Mat& A = t.nodes_[a].v;
        Mat mask = (A.array() >= c.array()).cast<double>();
        t.add_grad(a, t.nodes_[out].g.cwiseProduct(mask));
    };
    return out;
}

int Tape::select_rows(int a, std::vector<int> rows) {
    const Mat& A = nodes_[a].v;
    Mat v(static_cast<Eigen::Index>(rows.size()), A.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) v.row(static_cast<Eigen::Index>(i)) = A.row(rows[i]);
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, out, rows = std::move(rows)](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        if (!t.nodes_[a].needs_grad) return;
        t.touch_grad(a);
        for (std::size_t i = 0; i < rows.size(); ++i)
            t.nodes_[a].g.row(rows[i]) += G.row(static_cast<Eigen::Index>(i));
    };
    return out;
}

int Tape::vstack(const std::vector<int>& parts) {
    Eigen::Index rows = 0;
    const Eigen::Index cols = nodes_[parts[0]].v.cols();
    bool ng = false;
    for (int p : parts) {
        if (nodes_[p].v.cols() != cols) throw ShapeError("vstack", "column count mismatch");
        rows += nodes_[p].v.rows();
        ng = ng || nodes_[p].needs_grad;
    }
    Mat v(rows, cols);
    Eigen::Index r = 0;
    for (int p : parts) {
        v.middleRows(r, nodes_[p].v.rows()) = nodes_[p].v;
        r += nodes_[p].v.rows();
    }
    int out = push(std::move(v), ng);
    nodes_[out].back = [parts, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        Eigen::Index r = 0;
        for (int p : parts) {
            Eigen::Index n = t.nodes_[p].v.rows();
            t.add_grad(p, G.middleRows(r, n));
            r += n;
        }
    };
    return out;
}

int Tape::tile_rows(int a, int times) {
    const Mat& A = nodes_[a].v;
    Mat v(A.rows() * times, A.cols());
    for (int i = 0; i < times; ++i) v.middleRows(i * A.rows(), A.rows()) = A;
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, times, out](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        const Eigen::Index n = t.nodes_[a].v.rows();
        Mat acc = Mat::Zero(n, t.nodes_[a].v.cols());
        for (int i = 0; i < times; ++i) acc += G.middleRows(i * n, n);
        t.add_grad(a, acc);
    };
    return out;
}

int Tape::chunk_rows(int a, int h, int A) {
    const Mat& X = nodes_[a].v;
    if (X.cols() != static_cast<Eigen::Index>(h) * A) throw ShapeError("chunk_rows", "column count != h*A");
    const Eigen::Index B = X.rows();
    Mat v(B * h, A);
    for (Eigen::Index b = 0; b < B; ++b)
        for (int i = 0; i < h; ++i)
            for (int j = 0; j < A; ++j) v(b * h + i, j) = X(b, static_cast<Eigen::Index>(i) * A + j);
    int out = push(std::move(v), nodes_[a].needs_grad);
    nodes_[out].back = [a, h, A, out](Tape& t) {
        if (!t.nodes_[a].needs_grad) return;
        const Mat& G = t.nodes_[out].g;
        const Eigen::Index B = t.nodes_[a].v.rows();
        Mat acc = Mat::Zero(B, static_cast<Eigen::Index>(h) * A);
        for (Eigen::Index b = 0; b < B; ++b)
            for (int i = 0; i < h; ++i)
                for (int j = 0; j < A; ++j) acc(b, static_cast<Eigen::Index>(i) * A + j) = G(b * h + i, j);
        t.add_grad(a, acc);
    };
    return out;
}

int Tape::attention(int q, int k, int v, int T, bool causal) {
    const Mat& Q = nodes_[q].v;
    const Mat& K = nodes_[k].v;
    const Mat& V = nodes_[v].v;
    if (Q.rows() != K.rows() || Q.rows() != V.rows() || Q.cols() != K.cols())
        throw ShapeError("attention", "Q/K/V shape mismatch");
    if (Q.rows() % T != 0) throw ShapeError("attention", "rows not divisible by sequence length");
    const Eigen::Index B = Q.rows() / T;
    const double inv_scale = 1.0 / std::sqrt(static_cast<double>(Q.cols()));

    // Softmax rows are cached for the backward pass.
    auto probs = std::make_shared<std::vector<Mat>>();
    probs->reserve(B);
    Mat out_v(Q.rows(), V.cols());
    for (Eigen::Index b = 0; b < B; ++b) {
        Mat S = Q.middleRows(b * T, T) * K.middleRows(b * T, T).transpose() * inv_scale;
        if (causal) {
            for (int i = 0; i < T; ++i)
                for (int j = i + 1; j < T; ++j) S(i, j) = -std::numeric_limits<double>::infinity();
        }
        Mat P(T, T);
        for (int i = 0; i < T; ++i) {
            double mx = S.row(i).maxCoeff();
            Eigen::ArrayXd e = (S.row(i).array() - mx).exp();
            P.row(i) = (e / e.sum()).matrix();
        }
        out_v.middleRows(b * T, T) = P * V.middleRows(b * T, T);
        probs->push_back(std::move(P));
    }

    bool ng = nodes_[q].needs_grad || nodes_[k].needs_grad || nodes_[v].needs_grad;
    int out = push(std::move(out_v), ng);
    nodes_[out].back = [q, k, v, T, out, probs, inv_scale](Tape& t) {
        const Mat& G = t.nodes_[out].g;
        const Mat& Q = t.nodes_[q].v;
        const Mat& K = t.nodes_[k].v;
        const Mat& V = t.nodes_[v].v;
        const Eigen::Index B = Q.rows() / T;
        Mat gQ = Mat::Zero(Q.rows(), Q.cols());
        Mat gK = Mat::Zero(K.rows(), K.cols());
        Mat gV = Mat::Zero(V.rows(), V.cols());
        for (Eigen::Index b = 0; b < B; ++b) {
            const Mat& P = (*probs)[static_cast<std::size_t>(b)];
            Mat Gb = G.middleRows(b * T, T);
            Mat Vb = V.middleRows(b * T, T);
            gV.middleRows(b * T, T) = P.transpose() * Gb;
            Mat dP = Gb * Vb.transpose();
            Mat dS(T, T);
            for (int i = 0; i < T; ++i) {
                double dot = dP.row(i).dot(P.row(i));
                dS.row(i) = P.row(i).cwiseProduct(dP.row(i) - Eigen::RowVectorXd::Constant(T, dot));
            }
            gQ.middleRows(b * T, T) = dS * K.middleRows(b * T, T) * inv_scale;
            gK.middleRows(b * T, T) = dS.transpose() * Q.middleRows(b * T, T) * inv_scale;
        }
        t.add_grad(q, gQ);
        t.add_grad(k, gK);
        t.add_grad(v, gV);
    };
    return out;
}

void Tape::backward(int loss) {
    const Node& L = nodes_[loss];
    if (L.v.rows() != 1 || L.v.cols() != 1) throw ShapeError("backward", "loss must be a 1x1 scalar");
    if (!std::isfinite(L.v(0, 0))) throw TrainingAbort("non-finite loss value");
    touch_grad(loss);
    nodes_[loss].g(0, 0) = 1.0;
    for (int i = loss; i >= 0; --i) {
        Node& n = nodes_[i];
        if (n.grad_live && n.back) n.back(*this);
    }
    ran_backward_ = true;
}

Gradients Tape::param_grads(const ParamSet& ps) const {
    Gradients g;
    for (const ParamRef& ref : param_refs_) {
        if (ref.ps != &ps) continue;
        const Node& n = nodes_[ref.node];
        if (n.grad_live)
            g.accumulate(ref.name, n.g);
        else
            g.accumulate(ref.name, Mat::Zero(n.v.rows(), n.v.cols()));
    }
    return g;
}

}  // namespace corl::nn
