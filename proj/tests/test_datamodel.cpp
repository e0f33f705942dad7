#include <doctest.h>

#include <cmath>
#include <vector>

#include "sbr/datamodel.hpp"
#include "sbr/errors.hpp"

using namespace sbr;

TEST_CASE("segment counts records per subgroup") {
    CHECK(segment(std::vector<LabelledDatum>{}).total() == 0);

    const std::vector<LabelledDatum> data{{0.5, 0, 0}, {1.2, 1, 1}, {-0.3, 0, 0}};
    const auto d = segment(data);
    CHECK(d.count({0, 0}) == 2);
    CHECK(d.count({0, 1}) == 0);
    CHECK(d.count({1, 0}) == 0);
    CHECK(d.count({1, 1}) == 1);
    CHECK(d.total() == 3);
    CHECK(d.group({0, 0}) == std::vector<double>{0.5, -0.3});
}

TEST_CASE("segment is a homomorphism over concatenation") {
    const std::vector<LabelledDatum> a{{1, 0, 0}, {2, 1, 0}, {3, 0, 1}};
    const std::vector<LabelledDatum> b{{4, 1, 1}, {5, 0, 0}};
    std::vector<LabelledDatum> ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    auto merged = segment(a);
    for (const auto& x : b) merged.append(x);
    CHECK(segment(ab) == merged);
}

TEST_CASE("segment rejects bad records with their index") {
    const std::vector<LabelledDatum> nan_x{{0.0, 0, 0}, {std::nan(""), 0, 1}};
    try {
        segment(nan_x);
        FAIL("expected RecordError");
    } catch (const RecordError& e) {
        CHECK(e.index() == 1);
    }
    CHECK_THROWS_AS(segment(std::vector<LabelledDatum>{{0.0, 2, 0}}), RecordError);
    CHECK_THROWS_AS(segment(std::vector<LabelledDatum>{{INFINITY, 0, 0}}), RecordError);
}

TEST_CASE("empirical weights") {
    auto build = [](std::array<int, 4> n) {
        ResearchDataset d;
        for (std::size_t i = 0; i < 4; ++i)
            for (int k = 0; k < n[i]; ++k) d.append({0.0, SubgroupKey::from_index(i).u, SubgroupKey::from_index(i).s});
        return d;
    };
    for (double p : empirical_weights(build({1, 1, 1, 1})).values()) CHECK(p == 0.25);

    const auto w = empirical_weights(build({18, 12, 42, 28}));
    CHECK(w.p({0, 0}) == doctest::Approx(0.18).epsilon(1e-15));
    CHECK(w.p({0, 1}) == doctest::Approx(0.12).epsilon(1e-15));
    CHECK(w.p({1, 0}) == doctest::Approx(0.42).epsilon(1e-15));
    CHECK(w.p({1, 1}) == doctest::Approx(0.28).epsilon(1e-15));
    CHECK(w.pr_u(0) == doctest::Approx(0.3));
    CHECK(*w.pr_s_given_u(1, 0) == doctest::Approx(0.4));

    const auto deg = empirical_weights(build({2, 0, 0, 0}));
    CHECK(deg.p({0, 0}) == 1.0);
    CHECK_FALSE(deg.pr_s_given_u(0, 1).has_value());

    CHECK_THROWS_AS(empirical_weights(ResearchDataset{}), UndefinedWeightsError);

    // sums to one for awkward counts
    const auto odd = empirical_weights(build({7, 13, 29, 3}));
    double s = 0.0;
    for (double p : odd.values()) s += p;
    CHECK(std::abs(s - 1.0) <= 1e-12);
}

TEST_CASE("attribute weights validation") {
    CHECK_THROWS_AS(AttributeWeights({0.5, 0.5, 0.5, 0.0}), ConfigError);
    CHECK_THROWS_AS(AttributeWeights({1.2, -0.2, 0.0, 0.0}), ConfigError);
    const auto w = AttributeWeights::from_conditionals(0.3, 0.4, 0.6);
    CHECK(w.p({0, 0}) == doctest::Approx(0.18));
    CHECK(w.p({1, 1}) == doctest::Approx(0.42));
}

TEST_CASE("representation bias predicate") {
    const AttributeWeights half({0.5, 0.5, 0.0, 0.0});
    CHECK_FALSE(has_representation_bias({0, 0}, half, 100, 40));
    const AttributeWeights small({0.025, 0.025, 0.475, 0.475});
    CHECK(has_representation_bias({0, 0}, small, 1000, 60));
    // equality is not bias
    CHECK_FALSE(has_representation_bias({1, 1}, AttributeWeights::uniform(), 4 * 137, 137));

    // monotone in the stopping number
    bool seen = false;
    for (int stop = 0; stop < 400; ++stop) {
        const bool b = has_representation_bias({0, 1}, small, 4000, stop);
        CHECK(!(seen && !b));
        seen = seen || b;
    }
}
