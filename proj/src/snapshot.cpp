#include "sbr/snapshot.hpp"

#include <algorithm>
#include <cmath>

#include "sbr/errors.hpp"

namespace sbr {

namespace {
// JSON has no infinities; the smoothed statistic is +inf before k = 2.
json finite_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

template <typename T>
T get(const json& j, const char* key) {
    if (!j.contains(key)) throw ConfigError(std::string("snapshot field '") + key + "' missing");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("snapshot field '") + key + "': " + e.what());
    }
}
}  // namespace

void check_format(const json& j, const std::string& format) {
    if (!j.is_object() || get<std::string>(j, "format") != format)
        throw ConfigError("not a " + format + " snapshot");
    const int v = get<int>(j, "version");
    if (v != kSnapshotVersion) throw ConfigError(format + " snapshot version " + std::to_string(v) + " unsupported");
}

json prior_to_json(const PriorSpec& p) {
    json j;
    j["kind"] = p.kind_name();
    if (p.kind == PriorSpec::Kind::uniform) {
        j["x_min"] = p.a;
        j["x_max"] = p.b;
    } else {
        j["mean"] = p.a;
        j["sd"] = p.b;
    }
    j["nu0"] = p.nu0;
    return j;
}

PriorSpec prior_from_json(const json& j) {
    const auto kind = get<std::string>(j, "kind");
    const double nu0 = get<double>(j, "nu0");
    if (kind == "uniform") return PriorSpec::uniform(get<double>(j, "x_min"), get<double>(j, "x_max"), nu0);
    if (kind == "gaussian") return PriorSpec::gaussian(get<double>(j, "mean"), get<double>(j, "sd"), nu0);
    throw ConfigError("unknown prior kind '" + kind + "'");
}

json learner_to_json(const SubgroupLearner& l) {
    const auto& s = l.state();
    json j;
    j["format"] = "sbr-learner";
    j["version"] = kSnapshotVersion;
    j["prior"] = prior_to_json(s.prior);
    j["config"] = {{"epsilon", s.config.epsilon},
                   {"window", s.config.window},
                   {"k_min", s.config.k_min},
                   {"min_interior_cells", s.config.min_interior_cells}};
    j["vertices"] = s.vertices;
    j["alpha"] = s.alpha;
    j["counts"] = s.counts;
    j["kld_history"] = s.kld_history;
    j["stat_history"] = s.stat_history;
    j["smoothed"] = finite_or_null(s.smoothed);
    j["k"] = s.k;
    j["quenched"] = s.quenched;
    j["out_of_support"] = s.out_of_support;
    return j;
}

SubgroupLearner learner_from_json(const json& j) {
    check_format(j, "sbr-learner");
    LearnerState s;
    s.prior = prior_from_json(j.at("prior"));
    const auto& c = j.at("config");
    s.config = {get<double>(c, "epsilon"), get<int>(c, "window"), get<int>(c, "k_min"),
                get<int>(c, "min_interior_cells")};
    s.vertices = get<std::vector<double>>(j, "vertices");
    s.alpha = get<std::vector<double>>(j, "alpha");
    s.counts = get<std::vector<std::int64_t>>(j, "counts");
    s.kld_history = get<std::vector<double>>(j, "kld_history");
    s.stat_history = get<std::vector<double>>(j, "stat_history");
    s.smoothed = j.at("smoothed").is_null() ? INFINITY : get<double>(j, "smoothed");
    s.k = get<std::int64_t>(j, "k");
    s.quenched = get<bool>(j, "quenched");
    s.out_of_support = get<std::int64_t>(j, "out_of_support");
    return SubgroupLearner(std::move(s));
}

json conditional_to_json(const QuantizedConditional& q) {
    return {{"centroids", q.centroids}, {"weights", q.weights}, {"vertices", q.vertices}};
}

QuantizedConditional conditional_from_json(const json& j) {
    QuantizedConditional q;
    q.centroids = get<std::vector<double>>(j, "centroids");
    q.weights = get<std::vector<std::int64_t>>(j, "weights");
    q.vertices = get<std::vector<double>>(j, "vertices");
    q.validate();
    return q;
}

json model_to_json(const RepairModel& m) {
    json j;
    j["format"] = "sbr-model";
    j["version"] = kSnapshotVersion;
    j["t"] = m.t;
    j["snap_vertices"] = m.snap_vertices;
    j["weights"] = m.weights.values();
    json groups = json::array();
    for (int u = 0; u <= 1; ++u) {
        if (!m.fitted(u)) continue;
        const auto& p = *m.by_u[static_cast<std::size_t>(u)];
        groups.push_back({{"u", u},
                          {"q0", conditional_to_json(p.q0)},
                          {"q1", conditional_to_json(p.q1)},
                          {"plan", p.plan.dense()}});
    }
    j["groups"] = std::move(groups);
    return j;
}

RepairModel model_from_json(const json& j) {
    check_format(j, "sbr-model");
    RepairModel m;
    m.t = get<double>(j, "t");
    if (!(m.t >= 0.0 && m.t <= 1.0)) throw ConfigError("model t must lie in [0, 1]");
    m.snap_vertices = get<bool>(j, "snap_vertices");
    m.weights = AttributeWeights(get<PerSubgroup<double>>(j, "weights"));
    for (const auto& g : j.at("groups")) {
        const int u = get<int>(g, "u");
        if (u != 0 && u != 1) throw ConfigError("model group u must be 0 or 1");
        RepairPair p{conditional_from_json(g.at("q0")), conditional_from_json(g.at("q1")),
                     TransportPlan::from_dense(get<std::vector<std::vector<double>>>(g, "plan"))};
        if (p.plan.rows() != p.q0.size() || p.plan.cols() != p.q1.size())
            throw ConfigError("model plan shape does not match its conditionals");
        for (std::size_t i = 0; i < p.plan.rows(); ++i)
            if (std::abs(p.plan.row_mass(i) - p.q0.mass(i)) > 1e-10) throw ConfigError("model plan row marginal mismatch");
        for (std::size_t c = 0; c < p.plan.cols(); ++c)
            if (std::abs(p.plan.col_mass(c) - p.q1.mass(c)) > 1e-10) throw ConfigError("model plan column marginal mismatch");
        m.by_u[static_cast<std::size_t>(u)] = std::move(p);
    }
    return m;
}

json geometric_to_json(const QuantileRepairModel& m) {
    return {{"format", "sbr-geometric"}, {"version", kSnapshotVersion}, {"sorted", m.sorted}};
}

QuantileRepairModel geometric_from_json(const json& j) {
    check_format(j, "sbr-geometric");
    QuantileRepairModel m;
    m.sorted = get<PerSubgroup<std::vector<double>>>(j, "sorted");
    for (const auto& v : m.sorted)
        if (v.empty() || !std::is_sorted(v.begin(), v.end())) throw ConfigError("geometric snapshot: bad sample");
    return m;
}

}  // namespace sbr
