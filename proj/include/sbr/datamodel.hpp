#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sbr {

// One observation: scalar feature x with unprotected attribute u and
// protected attribute s, both binary.
struct LabelledDatum {
    double x = 0.0;
    int u = 0;
    int s = 0;

    bool operator==(const LabelledDatum&) const = default;
};

struct SubgroupKey {
    int u = 0;
    int s = 0;

    constexpr std::size_t index() const noexcept { return static_cast<std::size_t>(2 * u + s); }
    static constexpr SubgroupKey from_index(std::size_t i) noexcept {
        return {static_cast<int>(i / 2), static_cast<int>(i % 2)};
    }
    std::string label() const;

    bool operator==(const SubgroupKey&) const = default;
};

inline constexpr std::array<SubgroupKey, 4> kSubgroups{{{0, 0}, {0, 1}, {1, 0}, {1, 1}}};

template <typename T>
using PerSubgroup = std::array<T, 4>;

// Attribute-segmented data: one arrival-ordered feature sequence per (u,s).
class ResearchDataset {
public:
    ResearchDataset() = default;
    explicit ResearchDataset(PerSubgroup<std::vector<double>> groups);

    const std::vector<double>& group(SubgroupKey key) const { return groups_[key.index()]; }
    const PerSubgroup<std::vector<double>>& groups() const noexcept { return groups_; }
    std::size_t count(SubgroupKey key) const { return groups_[key.index()].size(); }
    PerSubgroup<std::size_t> counts() const;
    std::size_t total() const noexcept;

    void append(const LabelledDatum& d);

    // Flattened back to labelled records, subgroup by subgroup.
    std::vector<LabelledDatum> records() const;

    bool operator==(const ResearchDataset&) const = default;

private:
    PerSubgroup<std::vector<double>> groups_{};
};

// p_{u,s} for the four subgroups; Pr[u] and Pr[s|u] derived.
class AttributeWeights {
public:
    AttributeWeights() = default;
    // Throws ConfigError unless the entries form a probability vector (1e-12).
    explicit AttributeWeights(PerSubgroup<double> p);

    static AttributeWeights uniform() { return AttributeWeights({0.25, 0.25, 0.25, 0.25}); }
    // p_{u,s} = Pr[u] * Pr[s|u]
    static AttributeWeights from_conditionals(double pr_u0, double pr_s1_given_u0, double pr_s1_given_u1);

    double p(SubgroupKey key) const { return p_[key.index()]; }
    const PerSubgroup<double>& values() const noexcept { return p_; }
    double pr_u(int u) const;
    // Empty when Pr[u] == 0 (the conditional is undefined).
    std::optional<double> pr_s_given_u(int s, int u) const;

private:
    PerSubgroup<double> p_{0.25, 0.25, 0.25, 0.25};
};

// Throws RecordError (with the offending index) on non-finite x or labels
// outside {0,1}.
ResearchDataset segment(std::span<const LabelledDatum> data);

// Throws UndefinedWeightsError when the dataset is empty.
AttributeWeights empirical_weights(const ResearchDataset& d);

// Definition of representation bias: the expected share p_{u,s} n falls short
// of the stopping number required to learn that subgroup.
bool has_representation_bias(SubgroupKey key, const AttributeWeights& weights, std::int64_t n,
                             std::int64_t stopping_number);

}  // namespace sbr
