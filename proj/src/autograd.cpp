#include "imea/autograd.hpp"

#include <cmath>
#include <memory>

namespace imea::ag {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::push(Matrix value, Backward back) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(back), nullptr});
    return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::variable(Matrix value) { return push(std::move(value), nullptr); }

Var Tape::param(Parameter& p) {
    auto v = push(p.value, nullptr);
    nodes_.back().param = &p;
    return v;
}

Matrix& Tape::grad_buffer(int id) {
    auto& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0 && n.value.size() != 0) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
}

void Tape::backward(Var root) {
    if (done_) throw GradientError("backward already run on this tape");
    done_ = true;
    if (root.rows() != 1 || root.cols() != 1) throw GradientError("backward root must be a scalar");
    grad_buffer(root.id()).setOnes();
    for (int id = root.id(); id >= 0; --id) {
        auto& n = nodes_[static_cast<std::size_t>(id)];
        if (n.grad.size() == 0) continue;
        if (n.back) {
            // Copy the closure: it may push nothing but can touch other nodes.
            auto back = n.back;
            back(*this, id);
        }
        auto& node = nodes_[static_cast<std::size_t>(id)];
        if (node.param != nullptr) {
            if (!node.grad.allFinite()) throw GradientError("non-finite gradient for " + node.param->name);
            node.param->grad += node.grad;
        }
    }
}

namespace {

void check_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw Error(std::string(op) + ": shape mismatch " + std::to_string(a.rows()) + "x" +
                    std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
    }
}

}  // namespace

Var add(Var a, Var b) {
    check_same_shape(a.value(), b.value(), "add");
    const int ia = a.id(), ib = b.id();
    return a.tape()->push(a.value() + b.value(), [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        t.grad_buffer(ia) += g;
        t.grad_buffer(ib) += g;
    });
}

Var sub(Var a, Var b) {
    check_same_shape(a.value(), b.value(), "sub");
    const int ia = a.id(), ib = b.id();
    return a.tape()->push(a.value() - b.value(), [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        t.grad_buffer(ia) += g;
        t.grad_buffer(ib) -= g;
    });
}

Var mul(Var a, Var b) {
    check_same_shape(a.value(), b.value(), "mul");
    const int ia = a.id(), ib = b.id();
    return a.tape()->push(a.value().cwiseProduct(b.value()), [ia, ib](Tape& t, int self) {
        const Matrix g = t.grad(self);
        t.grad_buffer(ia) += g.cwiseProduct(t.value(ib));
        t.grad_buffer(ib) += g.cwiseProduct(t.value(ia));
    });
}

Var scale(Var a, double s) {
    const int ia = a.id();
    return a.tape()->push(a.value() * s, [ia, s](Tape& t, int self) { t.grad_buffer(ia) += t.grad(self) * s; });
}

Var add_row(Var a, Var row) {
    if (row.rows() != 1 || row.cols() != a.cols()) throw Error("add_row: bias shape mismatch");
    const int ia = a.id(), ir = row.id();
    Matrix out = a.value();
    out.rowwise() += row.value().row(0);
    return a.tape()->push(std::move(out), [ia, ir](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        t.grad_buffer(ia) += g;
        t.grad_buffer(ir) += g.colwise().sum();
    });
}

Var add_constant(Var a, const Matrix& offset) {
    check_same_shape(a.value(), offset, "add_constant");
    const int ia = a.id();
    return a.tape()->push(a.value() + offset, [ia](Tape& t, int self) { t.grad_buffer(ia) += t.grad(self); });
}

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw Error("matmul: inner dimension mismatch");
    const int ia = a.id(), ib = b.id();
    return a.tape()->push(a.value() * b.value(), [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        t.grad_buffer(ia).noalias() += g * t.value(ib).transpose();
        t.grad_buffer(ib).noalias() += t.value(ia).transpose() * g;
    });
}

Var matmul_nt(Var a, Var b) {
    if (a.cols() != b.cols()) throw Error("matmul_nt: inner dimension mismatch");
    const int ia = a.id(), ib = b.id();
    return a.tape()->push(a.value() * b.value().transpose(), [ia, ib](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        t.grad_buffer(ia).noalias() += g * t.value(ib);
        t.grad_buffer(ib).noalias() += g.transpose() * t.value(ia);
    });
}

Var gelu(Var a) {
    constexpr double k = 0.7978845608028654;  // sqrt(2/pi)
    constexpr double c = 0.044715;
    const int ia = a.id();
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        const double v = x.data()[i];
        out.data()[i] = 0.5 * v * (1.0 + std::tanh(k * (v + c * v * v * v)));
    }
    return a.tape()->push(std::move(out), [ia](Tape& t, int self) {
        const Matrix& x = t.value(ia);
        const Matrix g = t.grad(self);
        Matrix& gx = t.grad_buffer(ia);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double v = x.data()[i];
            const double th = std::tanh(k * (v + c * v * v * v));
            const double d = 0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * k * (1.0 + 3.0 * c * v * v);
            gx.data()[i] += g.data()[i] * d;
        }
    });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
    const auto n = x.rows(), c = x.cols();
    if (gamma.rows() != 1 || gamma.cols() != c || beta.rows() != 1 || beta.cols() != c) {
        throw Error("layer_norm: scale/shift shape mismatch");
    }
    auto xhat = std::make_shared<Matrix>(n, c);
    auto inv_std = std::make_shared<Eigen::VectorXd>(n);
    Matrix out(n, c);
    const Matrix& xv = x.value();
    for (Eigen::Index r = 0; r < n; ++r) {
        const double mu = xv.row(r).mean();
        const double var = (xv.row(r).array() - mu).square().mean();
        (*inv_std)(r) = 1.0 / std::sqrt(var + eps);
        xhat->row(r) = (xv.row(r).array() - mu) * (*inv_std)(r);
        out.row(r) = xhat->row(r).cwiseProduct(gamma.value().row(0)) + beta.value().row(0);
    }
    const int ix = x.id(), ig = gamma.id(), ib = beta.id();
    return x.tape()->push(std::move(out), [ix, ig, ib, xhat, inv_std](Tape& t, int self) {
        const Matrix g = t.grad(self);
        const auto c = g.cols();
        t.grad_buffer(ig) += g.cwiseProduct(*xhat).colwise().sum();
        t.grad_buffer(ib) += g.colwise().sum();
        const RowVector gamma = t.value(ig).row(0);
        Matrix& gx = t.grad_buffer(ix);
        for (Eigen::Index r = 0; r < g.rows(); ++r) {
            const RowVector dxhat = g.row(r).cwiseProduct(gamma);
            const double m1 = dxhat.mean();
            const double m2 = dxhat.cwiseProduct(xhat->row(r)).sum() / static_cast<double>(c);
            gx.row(r).array() += (*inv_std)(r) * (dxhat.array() - m1 - xhat->row(r).array() * m2);
        }
    });
}

Var embed(Var table, Var mask_row, std::span<const EntityId> tokens, EntityId mask_token) {
    if (mask_row.rows() != 1 || mask_row.cols() != table.cols()) throw Error("embed: mask row shape mismatch");
    std::vector<EntityId> ids(tokens.begin(), tokens.end());
    Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        if (ids[i] == mask_token) {
            out.row(r) = mask_row.value().row(0);
        } else {
            if (ids[i] < 0 || ids[i] >= table.rows()) throw LookupError("token id out of range: " + std::to_string(ids[i]));
            out.row(r) = table.value().row(ids[i]);
        }
    }
    const int it = table.id(), im = mask_row.id();
    return table.tape()->push(std::move(out), [it, im, ids = std::move(ids), mask_token](Tape& t, int self) {
        const Matrix g = t.grad(self);
        Matrix& gt = t.grad_buffer(it);
        Matrix& gm = t.grad_buffer(im);
        for (std::size_t i = 0; i < ids.size(); ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            if (ids[i] == mask_token) {
                gm.row(0) += g.row(r);
            } else {
                gt.row(ids[i]) += g.row(r);
            }
        }
    });
}

Var select_rows(Var x, std::span<const int> rows) {
    std::vector<int> idx(rows.begin(), rows.end());
    Matrix out(static_cast<Eigen::Index>(idx.size()), x.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        if (idx[i] < 0 || idx[i] >= x.rows()) throw LookupError("select_rows: index out of range");
        out.row(static_cast<Eigen::Index>(i)) = x.value().row(idx[i]);
    }
    const int ix = x.id();
    return x.tape()->push(std::move(out), [ix, idx = std::move(idx)](Tape& t, int self) {
        const Matrix g = t.grad(self);
        Matrix& gx = t.grad_buffer(ix);
        for (std::size_t i = 0; i < idx.size(); ++i) gx.row(idx[i]) += g.row(static_cast<Eigen::Index>(i));
    });
}

Var block_mean(Var x, int block) {
    if (block <= 0 || x.rows() % block != 0) throw Error("block_mean: rows not divisible by block");
    const auto nb = x.rows() / block;
    Matrix out(nb, x.cols());
    for (Eigen::Index b = 0; b < nb; ++b) out.row(b) = x.value().middleRows(b * block, block).colwise().mean();
    const int ix = x.id();
    return x.tape()->push(std::move(out), [ix, block](Tape& t, int self) {
        const Matrix g = t.grad(self);
        Matrix& gx = t.grad_buffer(ix);
        const double inv = 1.0 / block;
        for (Eigen::Index b = 0; b < g.rows(); ++b) {
            gx.middleRows(b * block, block).rowwise() += g.row(b) * inv;
        }
    });
}

Var attention(Var q, Var k, Var v, int heads, int block) {
    const auto rows = q.rows(), d = q.cols();
    if (k.rows() != rows || v.rows() != rows || k.cols() != d || v.cols() != d) throw Error("attention: shape mismatch");
    if (heads <= 0 || d % heads != 0) throw Error("attention: width not divisible by heads");
    if (block <= 0 || rows % block != 0) throw Error("attention: rows not divisible by block");
    const auto dh = d / heads;
    const auto nb = rows / block;
    const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

    // Attention weights per (block, head), kept for the adjoint.
    auto weights = std::make_shared<std::vector<Matrix>>(static_cast<std::size_t>(nb * heads));
    Matrix out(rows, d);
    const Matrix& Q = q.value();
    const Matrix& K = k.value();
    const Matrix& V = v.value();
    for (Eigen::Index b = 0; b < nb; ++b) {
        for (int h = 0; h < heads; ++h) {
            auto qh = Q.block(b * block, h * dh, block, dh);
            auto kh = K.block(b * block, h * dh, block, dh);
            auto vh = V.block(b * block, h * dh, block, dh);
            Matrix s = (qh * kh.transpose()) * scale;
            for (Eigen::Index r = 0; r < s.rows(); ++r) {
                const double m = s.row(r).maxCoeff();
                s.row(r) = (s.row(r).array() - m).exp();
                s.row(r) /= s.row(r).sum();
            }
            out.block(b * block, h * dh, block, dh).noalias() = s * vh;
            (*weights)[static_cast<std::size_t>(b * heads + h)] = std::move(s);
        }
    }
    const int iq = q.id(), ik = k.id(), iv = v.id();
    return q.tape()->push(std::move(out), [iq, ik, iv, heads, block, dh, nb, scale, weights](Tape& t, int self) {
        const Matrix g = t.grad(self);
        const Matrix& Q = t.value(iq);
        const Matrix& K = t.value(ik);
        const Matrix& V = t.value(iv);
        t.grad_buffer(iq);
        t.grad_buffer(ik);
        t.grad_buffer(iv);
        for (Eigen::Index b = 0; b < nb; ++b) {
            for (int h = 0; h < heads; ++h) {
                const Matrix& a = (*weights)[static_cast<std::size_t>(b * heads + h)];
                auto gh = g.block(b * block, h * dh, block, dh);
                auto qh = Q.block(b * block, h * dh, block, dh);
                auto kh = K.block(b * block, h * dh, block, dh);
                auto vh = V.block(b * block, h * dh, block, dh);
                Matrix da = gh * vh.transpose();
                t.grad_buffer(iv).block(b * block, h * dh, block, dh).noalias() += a.transpose() * gh;
                Matrix ds(a.rows(), a.cols());
                for (Eigen::Index r = 0; r < a.rows(); ++r) {
                    const double dot = da.row(r).dot(a.row(r));
                    ds.row(r) = a.row(r).cwiseProduct((da.row(r).array() - dot).matrix());
                }
                ds *= scale;
                t.grad_buffer(iq).block(b * block, h * dh, block, dh).noalias() += ds * kh;
                t.grad_buffer(ik).block(b * block, h * dh, block, dh).noalias() += ds.transpose() * qh;
            }
        }
    });
}

Var row_norm(Var x) {
    Eigen::VectorXd norms = x.value().rowwise().norm();
    Matrix out = norms;
    const int ix = x.id();
    return x.tape()->push(std::move(out), [ix](Tape& t, int self) {
        const Matrix& g = t.grad(self);
        const Matrix& xv = t.value(ix);
        const Matrix& n = t.value(self);
        Matrix& gx = t.grad_buffer(ix);
        for (Eigen::Index r = 0; r < xv.rows(); ++r) {
            if (n(r, 0) > 0.0) gx.row(r) += xv.row(r) * (g(r, 0) / n(r, 0));
        }
    });
}

Var sum(Var a) {
    Matrix out(1, 1);
    out(0, 0) = a.value().sum();
    const int ia = a.id();
    return a.tape()->push(std::move(out), [ia](Tape& t, int self) {
        t.grad_buffer(ia).array() += t.grad(self)(0, 0);
    });
}

Var mean(Var a) {
    const auto n = static_cast<double>(a.value().size());
    return scale(sum(a), 1.0 / n);
}

Matrix normalize_rows(const Matrix& logits, Normalization norm) {
    Matrix p(logits.rows(), logits.cols());
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        if (norm == Normalization::softmax) {
            const double m = logits.row(r).maxCoeff();
            p.row(r) = (logits.row(r).array() - m).exp();
        } else {
            p.row(r) = logits.row(r);
        }
        p.row(r) /= p.row(r).sum();
    }
    return p;
}

Var cross_entropy(Var logits, const Matrix& targets, Normalization norm) {
    check_same_shape(logits.value(), targets, "cross_entropy");
    const Matrix& z = logits.value();
    Matrix out(1, 1);
    double total = 0.0;
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
        if (norm == Normalization::softmax) {
            const double m = z.row(r).maxCoeff();
            const double lse = m + std::log((z.row(r).array() - m).exp().sum());
            // sum_i q_i * (lse - z_i), skipping zero-mass entries
            for (Eigen::Index i = 0; i < z.cols(); ++i) {
                const double q = targets(r, i);
                if (q != 0.0) total += q * (lse - z(r, i));
            }
        } else {
            const double s = z.row(r).sum();
            for (Eigen::Index i = 0; i < z.cols(); ++i) {
                const double q = targets(r, i);
                if (q != 0.0) total -= q * std::log(z(r, i) / s);
            }
        }
    }
    out(0, 0) = total;
    const int iz = logits.id();
    return logits.tape()->push(std::move(out), [iz, targets, norm](Tape& t, int self) {
        const double g = t.grad(self)(0, 0);
        const Matrix& z = t.value(iz);
        Matrix& gz = t.grad_buffer(iz);
        for (Eigen::Index r = 0; r < z.rows(); ++r) {
            const double mass = targets.row(r).sum();
            if (norm == Normalization::softmax) {
                const double m = z.row(r).maxCoeff();
                RowVector p = (z.row(r).array() - m).exp();
                p /= p.sum();
                gz.row(r) += g * (p * mass - targets.row(r));
            } else {
                const double s = z.row(r).sum();
                for (Eigen::Index i = 0; i < z.cols(); ++i) {
                    const double q = targets(r, i);
                    gz(r, i) += g * (mass / s - (q != 0.0 ? q / z(r, i) : 0.0));
                }
            }
        }
    });
}

}  // namespace imea::ag
