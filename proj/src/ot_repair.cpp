#include "sbr/ot_repair.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>

#include "sbr/errors.hpp"

namespace sbr {

std::int64_t QuantizedConditional::total_weight() const {
    return std::accumulate(weights.begin(), weights.end(), std::int64_t{0});
}

double QuantizedConditional::mass(std::size_t j) const {
    return static_cast<double>(weights[j]) / static_cast<double>(total_weight());
}

void QuantizedConditional::validate() const {
    if (centroids.empty()) throw ConfigError("quantized conditional has no centroids");
    if (weights.size() != centroids.size()) throw ConfigError("centroid/weight length mismatch");
    for (std::size_t j = 0; j < centroids.size(); ++j) {
        if (!std::isfinite(centroids[j])) throw ConfigError("non-finite centroid");
        if (j > 0 && !(centroids[j - 1] < centroids[j])) throw ConfigError("centroids not strictly increasing");
        if (weights[j] <= 0) throw ConfigError("centroid weights must be positive");
    }
    if (!vertices.empty() && vertices.size() != centroids.size() + 1)
        throw ConfigError("source vertices must number centroids + 1");
}

QuantizedConditional QuantizedConditional::uniform(std::vector<double> centroids) {
    QuantizedConditional q;
    q.weights.assign(centroids.size(), 1);
    q.centroids = std::move(centroids);
    q.validate();
    return q;
}

QuantizedConditional centroids_from_learner(const SubgroupLearner& learner) {
    const std::int64_t n_hat = learner.stopping_number();
    const auto& v = learner.vertices();
    if (v.size() < 2)
        throw InsufficientSupportError("learner stopped at n-hat=" + std::to_string(n_hat) + " with " +
                                       std::to_string(v.size()) + " distinct value(s); need 2");
    QuantizedConditional q;
    q.vertices = v;
    q.centroids.reserve(v.size() - 1);
    q.weights.reserve(v.size() - 1);
    const auto& counts = learner.counts();
    for (std::size_t c = 0; c + 1 < v.size(); ++c) {
        q.centroids.push_back(0.5 * (v[c] + v[c + 1]));
        // cell [v_c, v_{c+1}) is learner cell c + 1
        q.weights.push_back(counts[c + 1]);
    }
    q.validate();
    return q;
}

// ---------------------------------------------------------------------------

TransportPlan::TransportPlan(std::size_t rows, std::size_t cols, std::vector<Entry> entries)
    : rows_(rows), cols_(cols) {
    if (rows == 0 || cols == 0) throw ConfigError("transport plan needs at least one row and column");
    double total = 0.0;
    for (const auto& e : entries) {
        if (e.i >= rows || e.j >= cols) throw ConfigError("transport plan entry out of range");
        if (!(e.mass >= 0.0) || !std::isfinite(e.mass)) throw ConfigError("transport plan mass must be >= 0");
        if (e.mass > 0.0) entries_.push_back(e);
        total += e.mass;
    }
    if (std::abs(total - 1.0) > 1e-10) throw ConfigError("transport plan mass does not sum to 1");
    std::sort(entries_.begin(), entries_.end(),
              [](const Entry& a, const Entry& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
    for (std::size_t t = 1; t < entries_.size(); ++t)
        if (entries_[t].i == entries_[t - 1].i && entries_[t].j == entries_[t - 1].j)
            throw ConfigError("duplicate transport plan entry");
    index();
}

void TransportPlan::index() {
    const std::size_t n = entries_.size();
    row_start_.assign(rows_ + 1, 0);
    col_start_.assign(cols_ + 1, 0);
    for (const auto& e : entries_) {
        ++row_start_[e.i + 1];
        ++col_start_[e.j + 1];
    }
    for (std::size_t i = 0; i < rows_; ++i) row_start_[i + 1] += row_start_[i];
    for (std::size_t j = 0; j < cols_; ++j) col_start_[j + 1] += col_start_[j];
    for (std::size_t i = 0; i < rows_; ++i)
        if (row_start_[i] == row_start_[i + 1]) throw ConfigError("transport plan row " + std::to_string(i) + " is empty");
    for (std::size_t j = 0; j < cols_; ++j)
        if (col_start_[j] == col_start_[j + 1]) throw ConfigError("transport plan column " + std::to_string(j) + " is empty");

    row_cum_.resize(n);
    for (std::size_t i = 0; i < rows_; ++i) {
        double acc = 0.0;
        for (std::size_t t = row_start_[i]; t < row_start_[i + 1]; ++t) row_cum_[t] = acc += entries_[t].mass;
    }
    col_order_.resize(n);
    std::iota(col_order_.begin(), col_order_.end(), std::size_t{0});
    std::stable_sort(col_order_.begin(), col_order_.end(),
                     [&](std::size_t a, std::size_t b) { return entries_[a].j < entries_[b].j; });
    col_cum_.resize(n);
    for (std::size_t j = 0; j < cols_; ++j) {
        double acc = 0.0;
        for (std::size_t t = col_start_[j]; t < col_start_[j + 1]; ++t) col_cum_[t] = acc += entries_[col_order_[t]].mass;
    }
}

TransportPlan TransportPlan::from_dense(const std::vector<std::vector<double>>& dense) {
    if (dense.empty() || dense.front().empty()) throw ConfigError("empty dense plan");
    const std::size_t cols = dense.front().size();
    std::vector<Entry> entries;
    for (std::size_t i = 0; i < dense.size(); ++i) {
        if (dense[i].size() != cols) throw ConfigError("ragged dense plan");
        for (std::size_t j = 0; j < cols; ++j)
            if (dense[i][j] != 0.0) entries.push_back({i, j, dense[i][j]});
    }
    return TransportPlan(dense.size(), cols, std::move(entries));
}

std::vector<std::vector<double>> TransportPlan::dense() const {
    std::vector<std::vector<double>> d(rows_, std::vector<double>(cols_, 0.0));
    for (const auto& e : entries_) d[e.i][e.j] = e.mass;
    return d;
}

double TransportPlan::at(std::size_t i, std::size_t j) const {
    for (std::size_t t = row_start_[i]; t < row_start_[i + 1]; ++t)
        if (entries_[t].j == j) return entries_[t].mass;
    return 0.0;
}

double TransportPlan::row_mass(std::size_t i) const {
    return row_cum_[row_start_[i + 1] - 1];
}

double TransportPlan::col_mass(std::size_t j) const {
    return col_cum_[col_start_[j + 1] - 1];
}

namespace {
std::size_t pick(const std::vector<double>& cum, std::size_t lo, std::size_t hi, Rng& rng) {
    const double total = cum[hi - 1];
    if (!(total > 0.0)) throw InternalError("transport plan: empty row or column");
    const double target = rng.uniform() * total;
    const auto it = std::upper_bound(cum.begin() + static_cast<std::ptrdiff_t>(lo),
                                     cum.begin() + static_cast<std::ptrdiff_t>(hi), target);
    const auto t = static_cast<std::size_t>(it - cum.begin());
    return t < hi ? t : hi - 1;
}
}  // namespace

std::size_t TransportPlan::sample_col(std::size_t i, Rng& rng) const {
    return entries_[pick(row_cum_, row_start_[i], row_start_[i + 1], rng)].j;
}

std::size_t TransportPlan::sample_row(std::size_t j, Rng& rng) const {
    return entries_[col_order_[pick(col_cum_, col_start_[j], col_start_[j + 1], rng)]].i;
}

bool TransportPlan::is_monotone() const {
    // Entries are sorted by (i, j); monotone support means j never decreases
    // along that order.
    for (std::size_t t = 1; t < entries_.size(); ++t)
        if (entries_[t].j < entries_[t - 1].j) return false;
    return true;
}

double TransportPlan::cost(std::span<const double> a, std::span<const double> b) const {
    if (a.size() != rows_ || b.size() != cols_) throw InternalError("plan cost: support size mismatch");
    double c = 0.0;
    for (const auto& e : entries_) {
        const double d = a[e.i] - b[e.j];
        c += d * d * e.mass;
    }
    return c;
}

TransportPlan solve_plan(const QuantizedConditional& mu0, const QuantizedConditional& mu1) {
    mu0.validate();
    mu1.validate();
    const std::int64_t w0 = mu0.total_weight();
    const std::int64_t w1 = mu1.total_weight();
    const double unit = 1.0 / (static_cast<double>(w0) * static_cast<double>(w1));
    std::vector<TransportPlan::Entry> entries;
    entries.reserve(mu0.size() + mu1.size());
    std::size_t i = 0, j = 0;
    std::int64_t r = mu0.weights[0] * w1;
    std::int64_t c = mu1.weights[0] * w0;
    while (i < mu0.size() && j < mu1.size()) {
        const std::int64_t t = std::min(r, c);
        entries.push_back({i, j, static_cast<double>(t) * unit});
        r -= t;
        c -= t;
        if (r == 0 && ++i < mu0.size()) r = mu0.weights[i] * w1;
        if (c == 0 && ++j < mu1.size()) c = mu1.weights[j] * w0;
    }
    return TransportPlan(mu0.size(), mu1.size(), std::move(entries));
}

std::size_t round_to_grid(double x, const QuantizedConditional& q, Rng& rng, bool snap) {
    const auto& c = q.centroids;
    const std::size_t m = c.size();
    if (snap && !q.vertices.empty()) {
        const auto it = std::lower_bound(q.vertices.begin(), q.vertices.end(), x);
        if (it != q.vertices.end() && *it == x) {
            const auto v = static_cast<std::size_t>(it - q.vertices.begin());
            return std::min(v, m - 1);
        }
    }
    if (x <= c.front()) return 0;
    if (x >= c.back()) return m - 1;
    const auto j = static_cast<std::size_t>(std::upper_bound(c.begin(), c.end(), x) - c.begin()) - 1;
    const double p = std::clamp((x - c[j]) / (c[j + 1] - c[j]), 0.0, 1.0);
    return j + (rng.bernoulli(p) ? 1 : 0);
}

RepairPair make_pair(QuantizedConditional q0, QuantizedConditional q1) {
    TransportPlan plan = solve_plan(q0, q1);
    return RepairPair{std::move(q0), std::move(q1), std::move(plan)};
}

RepairModel fit_repair_model(const PerSubgroup<const SubgroupLearner*>& learners, const AttributeWeights& weights,
                             bool snap_vertices) {
    RepairModel model;
    model.weights = weights;
    model.snap_vertices = snap_vertices;
    for (int u = 0; u <= 1; ++u) {
        const auto* l0 = learners[SubgroupKey{u, 0}.index()];
        const auto* l1 = learners[SubgroupKey{u, 1}.index()];
        if (!l0 && !l1) continue;
        if (!l0 || !l1) throw UnfittedGroupError("u=" + std::to_string(u) + " has only one fitted s-group");
        model.by_u[static_cast<std::size_t>(u)] = make_pair(centroids_from_learner(*l0), centroids_from_learner(*l1));
    }
    return model;
}

double repair(const RepairModel& model, const LabelledDatum& datum, Rng& rng) {
    if (!model.fitted(datum.u)) throw UnfittedGroupError("no repair fitted for u=" + std::to_string(datum.u));
    const auto& pair = *model.by_u[static_cast<std::size_t>(datum.u)];
    std::size_t j0, j1;
    if (datum.s == 0) {
        j0 = round_to_grid(datum.x, pair.q0, rng, model.snap_vertices);
        j1 = pair.plan.sample_col(j0, rng);
    } else {
        j1 = round_to_grid(datum.x, pair.q1, rng, model.snap_vertices);
        j0 = pair.plan.sample_row(j1, rng);
    }
    return (1.0 - model.t) * pair.q0.centroids[j0] + model.t * pair.q1.centroids[j1];
}

std::vector<LabelledDatum> repair_batch(const RepairModel& model, std::span<const LabelledDatum> data,
                                        std::uint64_t seed, unsigned threads) {
    for (std::size_t i = 0; i < data.size(); ++i)
        if (!model.fitted(data[i].u))
            throw UnfittedGroupError("record " + std::to_string(i) + ": no repair fitted for u=" +
                                     std::to_string(data[i].u));
    std::vector<LabelledDatum> out(data.begin(), data.end());
    auto work = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            Rng rng = Rng::substream(seed, i);
            out[i].x = repair(model, data[i], rng);
        }
    };
    threads = std::max(1u, threads);
    if (threads == 1 || data.size() < 1024) {
        work(0, data.size());
        return out;
    }
    {
        std::vector<std::jthread> pool;
        const std::size_t chunk = (data.size() + threads - 1) / threads;
        for (std::size_t lo = 0; lo < data.size(); lo += chunk)
            pool.emplace_back(work, lo, std::min(data.size(), lo + chunk));
    }
    return out;
}

ResearchDataset repair_dataset(const RepairModel& model, const ResearchDataset& data, std::uint64_t seed,
                               unsigned threads) {
    const auto recs = data.records();
    const auto fixed = repair_batch(model, recs, seed, threads);
    return segment(fixed);
}

}  // namespace sbr
