#pragma once
// Tape-based reverse-mode differentiation over dense row-major matrices.
//
// A Tape records every operation in creation order; backward() replays the
// recorded adjoint rules in reverse. Parameters are bound to the tape as
// leaves and receive their accumulated gradient in Parameter::grad.

#include <Eigen/Dense>

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "imea/kg.hpp"

namespace imea::ag {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct GradientError : Error {
    using Error::Error;
};

struct Parameter {
    std::string name;
    Matrix value;
    Matrix grad;

    Parameter() = default;
    Parameter(std::string n, Matrix v) : name(std::move(n)), value(std::move(v)), grad(Matrix::Zero(value.rows(), value.cols())) {}

    void zero_grad() { grad.setZero(value.rows(), value.cols()); }
};

class Tape;

class Var {
public:
    Var() = default;
    Var(Tape* tape, int id) : tape_(tape), id_(id) {}

    const Matrix& value() const;
    const Matrix& grad() const;
    Eigen::Index rows() const { return value().rows(); }
    Eigen::Index cols() const { return value().cols(); }
    double scalar() const { return value()(0, 0); }

    Tape* tape() const { return tape_; }
    int id() const { return id_; }

private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

class Tape {
public:
    Var constant(Matrix value);
    // A leaf whose gradient is kept on the tape (readable through Var::grad).
    Var variable(Matrix value);
    // A leaf bound to a parameter; backward() adds its gradient into p.grad.
    Var param(Parameter& p);

    // Seeds d(root)/d(root) = 1; root must be 1x1. May be called once per tape.
    void backward(Var root);

    std::size_t size() const { return nodes_.size(); }

    // Used by op implementations.
    using Backward = std::function<void(Tape&, int self)>;
    Var push(Matrix value, Backward back);
    const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
    const Matrix& grad(int id) const { return nodes_[static_cast<std::size_t>(id)].grad; }
    // Gradient buffer of node id, zero-initialized on first access.
    Matrix& grad_buffer(int id);

private:
    struct Node {
        Matrix value;
        Matrix grad;
        Backward back;
        Parameter* param = nullptr;
    };
    std::vector<Node> nodes_;
    bool done_ = false;
};

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);  // elementwise
Var scale(Var a, double s);
// a (n x c) + row (1 x c) broadcast over rows.
Var add_row(Var a, Var row);
// a (n x c) + fixed offset of the same shape.
Var add_constant(Var a, const Matrix& offset);
Var matmul(Var a, Var b);
// a * b^T
Var matmul_nt(Var a, Var b);
// Tanh-approximated GELU.
Var gelu(Var a);
// Row-wise layer normalization with learned scale and shift (1 x c each).
Var layer_norm(Var x, Var gamma, Var beta, double eps = 1e-5);
// Rows of table for each token; tokens equal to mask_token take mask_row instead.
Var embed(Var table, Var mask_row, std::span<const EntityId> tokens, EntityId mask_token);
// Rows of x at the given indices (repeats allowed).
Var select_rows(Var x, std::span<const int> rows);
// Mean of each consecutive block of `block` rows.
Var block_mean(Var x, int block);
// Scaled dot-product attention applied independently to each block of
// `block` rows, with `heads` heads over equal column slices.
Var attention(Var q, Var k, Var v, int heads, int block);
// Euclidean norm of each row (n x 1); the subgradient at 0 is taken as 0.
Var row_norm(Var x);
Var sum(Var a);
Var mean(Var a);

enum class Normalization { softmax, linear };

// Sum over rows of -sum_i targets(r,i) * log p(r,i), where p is the row-wise
// normalization of logits: softmax (default) or plain division by the row sum.
Var cross_entropy(Var logits, const Matrix& targets, Normalization norm = Normalization::softmax);

// Row-wise normalization used by cross_entropy, without recording.
Matrix normalize_rows(const Matrix& logits, Normalization norm);

}  // namespace imea::ag
