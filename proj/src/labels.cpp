#include "imea/labels.hpp"

#include <cmath>

namespace imea {

double SoftLabelVector::mass(EntityId e) const {
    auto it = entries_.find(e);
    return it == entries_.end() ? rest_ : it->second;
}

void SoftLabelVector::set(EntityId e, double mass) {
    if (e < 0 || static_cast<std::size_t>(e) >= vocab_) throw LookupError("label index out of range: " + std::to_string(e));
    entries_[e] = mass;
}

double SoftLabelVector::total() const {
    double t = rest_ * static_cast<double>(vocab_ - entries_.size());
    for (const auto& [e, m] : entries_) t += m;
    return t;
}

void SoftLabelVector::normalize() {
    const double t = total();
    if (!(t > 0.0)) throw Error("cannot normalize a label vector with no mass");
    rest_ /= t;
    for (auto& [e, m] : entries_) m /= t;
}

void SoftLabelVector::add_to(Eigen::Ref<ag::RowVector> row) const {
    if (static_cast<std::size_t>(row.size()) != vocab_) throw Error("label row has the wrong width");
    if (rest_ != 0.0) row.array() += rest_;
    for (const auto& [e, m] : entries_) row(e) += m - rest_;
}

void SoftLabelVector::add_to(Eigen::Ref<ag::RowVector> row, const std::vector<EntityId>& columns) const {
    if (static_cast<std::size_t>(row.size()) != columns.size()) throw Error("label row has the wrong width");
    for (std::size_t c = 0; c < columns.size(); ++c) row(static_cast<Eigen::Index>(c)) += mass(columns[c]);
}

std::vector<double> SoftLabelVector::dense() const {
    std::vector<double> out(vocab_, rest_);
    for (const auto& [e, m] : entries_) out[static_cast<std::size_t>(e)] = m;
    return out;
}

SoftLabelVector smooth_label(const std::vector<std::pair<EntityId, double>>& targets, std::size_t vocab_size) {
    if (targets.empty()) throw Error("smooth_label needs at least one target");
    double assigned = 0.0;
    for (const auto& [e, m] : targets) {
        if (!(m > 0.0 && m <= 1.0)) throw Error("target mass must be in (0, 1]");
        assigned += m;
    }
    SoftLabelVector tmp(vocab_size, 0.0);
    for (const auto& [e, m] : targets) tmp.set(e, m);
    const auto n_targets = tmp.entries().size();
    if (vocab_size <= n_targets) throw Error("vocabulary must be larger than the target set");
    const double rest = std::max(0.0, 1.0 - assigned) / static_cast<double>(vocab_size - n_targets);
    SoftLabelVector out(vocab_size, rest);
    for (const auto& [e, m] : tmp.entries()) out.set(e, m);
    // Masses that already sum to 1 up to rounding are kept bit-for-bit.
    if (std::abs(out.total() - 1.0) > 1e-12) out.normalize();
    return out;
}

SoftLabelVector smooth_label(EntityId target, std::size_t vocab_size, double s) {
    return smooth_label({{target, s}}, vocab_size);
}

}  // namespace imea
