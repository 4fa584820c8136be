#pragma once
// Smoothed prediction labels over the full entity vocabulary.

#include <map>
#include <utility>
#include <vector>

#include "imea/autograd.hpp"
#include "imea/kg.hpp"

namespace imea {

// Sparse label vector: explicit entries plus one shared value for every
// unlisted entity.
class SoftLabelVector {
public:
    SoftLabelVector() = default;
    SoftLabelVector(std::size_t vocab_size, double rest) : vocab_(vocab_size), rest_(rest) {}

    std::size_t vocab_size() const { return vocab_; }
    double rest() const { return rest_; }
    const std::map<EntityId, double>& entries() const { return entries_; }

    double mass(EntityId e) const;
    void set(EntityId e, double mass);
    double total() const;
    // Divides every entry (and the shared value) by total().
    void normalize();

    // Adds the dense form into `row`, optionally restricted to `columns`
    // (column c of row holds entity columns[c]).
    void add_to(Eigen::Ref<ag::RowVector> row) const;
    void add_to(Eigen::Ref<ag::RowVector> row, const std::vector<EntityId>& columns) const;

    std::vector<double> dense() const;

private:
    std::size_t vocab_ = 0;
    double rest_ = 0.0;
    std::map<EntityId, double> entries_;
};

// Each target gets its own mass; the remainder of 1 is spread uniformly over
// the non-target entities, then the vector is normalized. Throws Error if
// the targets leave no non-target entity or s is outside (0, 1].
SoftLabelVector smooth_label(const std::vector<std::pair<EntityId, double>>& targets, std::size_t vocab_size);
SoftLabelVector smooth_label(EntityId target, std::size_t vocab_size, double s);

}  // namespace imea
