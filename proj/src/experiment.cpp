#include "sbr/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <filesystem>
#include <fstream>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

#include "sbr/errors.hpp"
#include "sbr/geometric.hpp"
#include "sbr/ingest.hpp"
#include "sbr/labelled_csv.hpp"
#include "sbr/ot_repair.hpp"

namespace sbr {

// ---------------------------------------------------------------------------
// config

namespace {

const std::set<std::string> kKnownKeys{
    "schema",        "version",       "experiment",    "seed",          "trials",         "nu0",
    "epsilon",       "window",        "k_min",         "min_interior_cells",              "epsilon_by_group",
    "bins",          "lambda",        "prior",         "model",         "gmm",            "q_grid",
    "nu0_grid",      "prior_means",   "prior_sd",      "pr_u0_grid",    "holdout_fraction", "adult_paths",
    "features",      "adult_padding", "draw_cap",      "snap_vertices", "series_trials",  "threads"};

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field '") + key + "': " + e.what());
    }
}

GmmSpec gmm_from_json(const json& j) {
    GmmSpec g;
    read(j, "weights", g.weights);
    read(j, "means", g.means);
    read(j, "sds", g.sds);
    g.validate();
    return g;
}

MixtureModelSpec mixture_from_json(const json& j, const MixtureModelSpec& fallback) {
    MixtureModelSpec m = fallback;
    if (j.contains("laws")) {
        const auto& laws = j.at("laws");
        if (!laws.is_array() || laws.size() != 4) throw ConfigError("model.laws must list 4 subgroup laws");
        for (std::size_t i = 0; i < 4; ++i) m.laws[i] = gmm_from_json(laws[i]);
    }
    if (j.contains("weights")) {
        PerSubgroup<double> w{};
        read(j, "weights", w);
        m.weights = AttributeWeights(w);
    }
    m.validate();
    return m;
}

}  // namespace

namespace {
ExperimentConfig parse_config(const json& j, bool strict);
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    return parse_config(j, true);
}

ExperimentConfig ExperimentConfig::knobs_from_json(const json& j) {
    return parse_config(j, false);
}

namespace {
ExperimentConfig parse_config(const json& j, bool strict) {
    if (!j.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!kKnownKeys.count(k)) throw ConfigError("unknown config key '" + k + "'");
    if (j.contains("schema") && j.at("schema") != "sbr-experiment") throw ConfigError("config schema must be sbr-experiment");
    if (j.contains("version") && j.at("version") != 1) throw ConfigError("unsupported config version");
    ExperimentConfig c;
    read(j, "experiment", c.experiment);
    if (strict && !j.contains("seed")) throw ConfigError("config needs a seed");
    read(j, "seed", c.seed);
    read(j, "trials", c.trials);
    read(j, "nu0", c.nu0);
    read(j, "epsilon", c.learner.epsilon);
    read(j, "window", c.learner.window);
    read(j, "k_min", c.learner.k_min);
    read(j, "min_interior_cells", c.learner.min_interior_cells);
    read(j, "epsilon_by_group", c.epsilon_by_group);
    read(j, "bins", c.hist.bins);
    read(j, "lambda", c.hist.lambda);
    if (j.contains("prior")) c.prior = j.at("prior");
    if (j.contains("model")) c.model = j.at("model");
    if (j.contains("gmm")) c.gmm = j.at("gmm");
    read(j, "q_grid", c.q_grid);
    read(j, "nu0_grid", c.nu0_grid);
    read(j, "prior_means", c.prior_means);
    read(j, "prior_sd", c.prior_sd);
    read(j, "pr_u0_grid", c.pr_u0_grid);
    read(j, "holdout_fraction", c.holdout_fraction);
    read(j, "adult_paths", c.adult_paths);
    read(j, "features", c.features);
    read(j, "adult_padding", c.adult_padding);
    read(j, "draw_cap", c.draw_cap);
    read(j, "snap_vertices", c.snap_vertices);
    read(j, "series_trials", c.series_trials);
    read(j, "threads", c.threads);
    c.validate(strict);
    return c;
}
}  // namespace

void ExperimentConfig::validate(bool require_experiment) const {
    if (require_experiment &&
        std::find(kExperimentIds.begin(), kExperimentIds.end(), experiment) == kExperimentIds.end())
        throw ConfigError("unknown experiment '" + experiment + "'");
    if (trials < 0) throw ConfigError("trials must be >= 0");
    if (!(nu0 > 0.0)) throw ConfigError("nu0 must be positive");
    learner.validate();
    for (const auto& [k, v] : epsilon_by_group) {
        if (k != "0,0" && k != "0,1" && k != "1,0" && k != "1,1")
            throw ConfigError("epsilon_by_group keys are \"u,s\" pairs, got '" + k + "'");
        if (!(v > 0.0)) throw ConfigError("epsilon_by_group values must be positive");
    }
    hist.validate();
    for (int q : q_grid)
        if (q < 1) throw ConfigError("q_grid entries must be >= 1");
    for (double v : nu0_grid)
        if (!(v > 0.0)) throw ConfigError("nu0_grid entries must be positive");
    if (!(prior_sd > 0.0)) throw ConfigError("prior_sd must be positive");
    for (double p : pr_u0_grid)
        if (!(p > 0.0 && p < 1.0)) throw ConfigError("pr_u0_grid entries must lie in (0, 1)");
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) throw ConfigError("holdout_fraction must lie in (0, 1)");
    for (const auto& f : features) parse_adult_feature(f);
    if (!(adult_padding >= 0.0)) throw ConfigError("adult_padding must be >= 0");
    if (draw_cap < 1) throw ConfigError("draw_cap must be >= 1");
    if (series_trials < 0) throw ConfigError("series_trials must be >= 0");
    if (prior) {
        if (!prior->is_object() || !prior->contains("kind")) throw ConfigError("prior needs a kind");
        const auto kind = prior->at("kind");
        if (kind != "uniform" && kind != "gaussian") throw ConfigError("prior kind must be uniform or gaussian");
        if (kind == "gaussian" && (!prior->contains("mean") || !prior->contains("sd")))
            throw ConfigError("gaussian prior needs mean and sd");
    }
    if (gmm) gmm_from_json(*gmm);
    if (model) mixture_from_json(*model, intersectional_model());
}

json ExperimentConfig::to_json() const {
    json j;
    j["schema"] = "sbr-experiment";
    j["version"] = 1;
    j["experiment"] = experiment;
    j["seed"] = seed;
    j["trials"] = trials;
    j["nu0"] = nu0;
    j["epsilon"] = learner.epsilon;
    j["window"] = learner.window;
    j["k_min"] = learner.k_min;
    j["min_interior_cells"] = learner.min_interior_cells;
    j["epsilon_by_group"] = epsilon_by_group;
    j["bins"] = hist.bins;
    j["lambda"] = hist.lambda;
    j["prior"] = prior ? *prior : json(nullptr);
    j["model"] = model ? *model : json(nullptr);
    j["gmm"] = gmm ? *gmm : json(nullptr);
    j["q_grid"] = q_grid;
    j["nu0_grid"] = nu0_grid;
    j["prior_means"] = prior_means;
    j["prior_sd"] = prior_sd;
    j["pr_u0_grid"] = pr_u0_grid;
    j["holdout_fraction"] = holdout_fraction;
    j["adult_paths"] = adult_paths;
    j["features"] = features;
    j["adult_padding"] = adult_padding;
    j["draw_cap"] = draw_cap;
    j["snap_vertices"] = snap_vertices;
    j["series_trials"] = series_trials;
    return j;
}

std::string fnv1a_hex(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string ExperimentConfig::hash() const {
    return fnv1a_hex(to_json().dump());
}

LearnerConfig ExperimentConfig::learner_for(SubgroupKey key) const {
    LearnerConfig l = learner;
    const auto it = epsilon_by_group.find(std::to_string(key.u) + "," + std::to_string(key.s));
    if (it != epsilon_by_group.end()) l.epsilon = it->second;
    return l;
}

Moments moments(std::vector<double> v) {
    Moments m;
    m.n = v.size();
    if (v.empty()) return m;
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    if (v.size() > 1) {
        double ss = 0.0;
        for (double x : v) ss += (x - m.mean) * (x - m.mean);
        m.std = std::sqrt(ss / static_cast<double>(v.size() - 1));
    }
    std::sort(v.begin(), v.end());
    const std::size_t h = v.size() / 2;
    m.median = v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
    return m;
}

// ---------------------------------------------------------------------------
// harness

namespace {

struct Task {
    json rec;  // identifying fields, filled in by `run`
    std::uint64_t seed = 0;
    std::function<void(json& rec, std::string& series, std::uint64_t seed)> run;
    std::string series;
    double wall = 0.0;
};

void run_tasks(std::vector<Task>& tasks, unsigned threads) {
    if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
    std::atomic<std::size_t> next{0};
    std::exception_ptr fatal;
    std::mutex fatal_mu;
    auto worker = [&] {
        for (std::size_t i = next++; i < tasks.size(); i = next++) {
            auto& t = tasks[i];
            const auto t0 = std::chrono::steady_clock::now();
            try {
                t.run(t.rec, t.series, t.seed);
                t.rec["failed"] = false;
            } catch (const NonConvergenceError& e) {
                t.rec["failed"] = true;
                t.rec["error"] = e.what();
            } catch (const DataError& e) {
                t.rec["failed"] = true;
                t.rec["error"] = e.what();
            } catch (...) {
                std::lock_guard lock(fatal_mu);
                if (!fatal) fatal = std::current_exception();
            }
            t.wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
    };
    {
        std::vector<std::jthread> pool;
        for (unsigned w = 1; w < std::min<std::size_t>(threads, tasks.size()); ++w) pool.emplace_back(worker);
        worker();
    }
    if (fatal) std::rethrow_exception(fatal);
}

json moments_json(const Moments& m) {
    return {{"n", m.n}, {"mean", m.mean}, {"std", m.std}, {"median", m.median}};
}

// Groups records (skipping failed ones) by `keys` in order of first
// appearance and summarises each numeric field.
json aggregate(const std::vector<json>& recs, const std::vector<std::string>& keys,
               const std::vector<std::string>& fields) {
    std::vector<json> order;
    std::vector<std::vector<const json*>> members;
    std::vector<int> failures;
    for (const auto& r : recs) {
        json id = json::object();
        for (const auto& k : keys) id[k] = r.at(k);
        auto it = std::find(order.begin(), order.end(), id);
        std::size_t g;
        if (it == order.end()) {
            order.push_back(id);
            members.emplace_back();
            failures.push_back(0);
            g = order.size() - 1;
        } else {
            g = static_cast<std::size_t>(it - order.begin());
        }
        if (r.at("failed").get<bool>())
            ++failures[g];
        else
            members[g].push_back(&r);
    }
    json out = json::array();
    for (std::size_t g = 0; g < order.size(); ++g) {
        json row = order[g];
        row["trials"] = members[g].size();
        row["failures"] = failures[g];
        for (const auto& f : fields) {
            std::vector<double> v;
            for (const auto* r : members[g])
                if (r->contains(f) && r->at(f).is_number()) v.push_back(r->at(f).get<double>());
            row[f] = moments_json(moments(std::move(v)));
        }
        out.push_back(std::move(row));
    }
    return out;
}

json num_or_null(double v) {
    return std::isfinite(v) ? json(v) : json(nullptr);
}

std::string csv_header(const ExperimentConfig& cfg, const std::string& hash, const std::string& columns) {
    return "# config_hash=" + hash + " seed=" + std::to_string(cfg.seed) + "\n" + columns + "\n";
}

std::string fmt(double v) {
    return std::isfinite(v) ? format_double(v) : std::string(v > 0 ? "inf" : v < 0 ? "-inf" : "nan");
}

PriorSpec make_prior(const ExperimentConfig& cfg, double lo, double hi, double nu0) {
    if (!cfg.prior) return PriorSpec::uniform(lo, hi, nu0);
    const auto& p = *cfg.prior;
    if (p.at("kind") == "gaussian") return PriorSpec::gaussian(p.at("mean").get<double>(), p.at("sd").get<double>(), nu0);
    return PriorSpec::uniform(p.value("x_min", lo), p.value("x_max", hi), nu0);
}

PerSubgroup<SubgroupLearner> make_learners(const ExperimentConfig& cfg, const PriorSpec& prior) {
    return {SubgroupLearner(prior, cfg.learner_for(kSubgroups[0])), SubgroupLearner(prior, cfg.learner_for(kSubgroups[1])),
            SubgroupLearner(prior, cfg.learner_for(kSubgroups[2])), SubgroupLearner(prior, cfg.learner_for(kSubgroups[3]))};
}

PerSubgroup<const SubgroupLearner*> pointers(const PerSubgroup<SubgroupLearner>& l) {
    return {&l[0], &l[1], &l[2], &l[3]};
}

json stopping_json(const PerSubgroup<std::int64_t>& n) {
    return json::array({n[0], n[1], n[2], n[3]});
}

// Definition of representation bias applied to a sample of the research
// set's total size drawn at the population weights.
json bias_flags(const AttributeWeights& w, const PerSubgroup<std::int64_t>& n_hat) {
    const std::int64_t total = std::accumulate(n_hat.begin(), n_hat.end(), std::int64_t{0});
    json a = json::array();
    for (auto key : kSubgroups) a.push_back(has_representation_bias(key, w, total, n_hat[key.index()]));
    return a;
}

// Repairs every datum; returns how many the geometric model refused.
std::size_t geometric_refusals(const QuantileRepairModel& g, const ResearchDataset& d) {
    std::size_t refused = 0;
    for (auto key : kSubgroups)
        for (double x : d.group(key)) {
            try {
                (void)repair_geometric(g, LabelledDatum{x, key.u, key.s});
            } catch (const OffSampleUnsupportedError&) {
                ++refused;
            }
        }
    return refused;
}

// ---------------------------------------------------------------------------
// experiments

using Finish = std::function<void(const std::vector<Task>&, ExperimentResult&)>;

std::string collect_series(const std::vector<Task>& tasks) {
    std::string s;
    for (const auto& t : tasks) s += t.series;
    return s;
}

Finish stopping_categorical(const ExperimentConfig& cfg, std::vector<Task>& tasks) {
    for (int q : cfg.q_grid)
        for (int t = 0; t < cfg.trials; ++t) {
            Task task;
            task.rec = {{"q", q}, {"trial", t}};
            task.seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
            task.run = [&cfg, q, t](json& rec, std::string& series, std::uint64_t seed) {
                const CategoricalSpec spec(q);
                Rng rng = Rng::substream(seed, static_cast<std::uint64_t>(q));
                SubgroupLearner l(make_prior(cfg, -5.0, 5.0, cfg.nu0), cfg.learner);
                stream_until_quenched(l, [&] { return spec.sample(rng); }, cfg.draw_cap);
                rec["n_hat"] = l.stopping_number();
                rec["distinct"] = l.vertices().size();
                if (t < cfg.series_trials) {
                    std::ostringstream os;
                    const auto& kh = l.kld_history();
                    const auto& sh = l.stat_history();
                    for (std::size_t i = 0; i < kh.size(); ++i)
                        os << q << ',' << t << ',' << i + 2 << ',' << fmt(std::log(kh[i])) << ','
                           << fmt(std::log(sh[i])) << '\n';
                    series = os.str();
                }
            };
            tasks.push_back(std::move(task));
        }
    return [&cfg](const std::vector<Task>& tasks, ExperimentResult& r) {
        r.summary["by_q"] = aggregate(r.records, {"q"}, {"n_hat", "distinct"});
        r.series["lkld.csv"] = csv_header(cfg, r.config_hash, "q,trial,k,lkld,log_stat") + collect_series(tasks);
    };
}

Finish stopping_gmm(const ExperimentConfig& cfg, std::vector<Task>& tasks) {
    const GmmSpec gmm = cfg.gmm ? gmm_from_json(*cfg.gmm) : minority_gmm();
    for (int t = 0; t < cfg.trials; ++t) {
        Task task;
        task.rec = {{"trial", t}};
        task.seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        task.run = [&cfg, gmm, t](json& rec, std::string& series, std::uint64_t seed) {
            Rng rng = Rng::substream(seed, 0);
            const auto [lo, hi] = gmm.range();
            SubgroupLearner l(make_prior(cfg, lo, hi, cfg.nu0), cfg.learner);
            const auto xs = stream_until_quenched(l, [&] { return gmm.sample(rng); }, cfg.draw_cap);
            const Moments m = moments(xs);
            const double var = m.std * m.std;
            rec["n_hat"] = l.stopping_number();
            rec["mean"] = m.mean;
            rec["variance"] = var;
            series = std::to_string(t) + ',' + std::to_string(l.stopping_number()) + ',' + fmt(m.mean) + ',' +
                     fmt(var) + '\n';
        };
        tasks.push_back(std::move(task));
    }
    return [&cfg, gmm](const std::vector<Task>& tasks, ExperimentResult& r) {
        const json agg = aggregate(r.records, {}, {"n_hat", "mean", "variance"});
        r.summary["stopping"] = agg.empty() ? json(nullptr) : agg.at(0);
        r.summary["analytic"] = {{"mean", gmm.mean()}, {"variance", gmm.variance()}};
        r.series["stopping_gmm.csv"] =
            csv_header(cfg, r.config_hash, "trial,n_hat,mean,variance") + collect_series(tasks);
    };
}

Finish prior_sweep(const ExperimentConfig& cfg, std::vector<Task>& tasks) {
    const GmmSpec gmm = cfg.gmm ? gmm_from_json(*cfg.gmm) : minority_gmm();
    const auto [lo, hi] = gmm.range();
    std::vector<std::pair<json, PriorSpec>> settings;
    for (double nu0 : cfg.nu0_grid)
        settings.emplace_back(json{{"prior", "uniform"}, {"nu0", nu0}, {"prior_mean", nullptr}},
                              PriorSpec::uniform(lo, hi, nu0));
    for (double m : cfg.prior_means)
        settings.emplace_back(json{{"prior", "gaussian"}, {"nu0", cfg.nu0}, {"prior_mean", m}},
                              PriorSpec::gaussian(m, cfg.prior_sd, cfg.nu0));
    for (const auto& [id, prior] : settings)
        for (int t = 0; t < cfg.trials; ++t) {
            Task task;
            task.rec = id;
            task.rec["trial"] = t;
            task.seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
            task.run = [&cfg, gmm, prior, id, t](json& rec, std::string& series, std::uint64_t seed) {
                // Same stream for every setting of a trial.
                Rng rng = Rng::substream(seed, 0);
                SubgroupLearner l(prior, cfg.learner);
                stream_until_quenched(l, [&] { return gmm.sample(rng); }, cfg.draw_cap);
                rec["n_hat"] = l.stopping_number();
                series = id["prior"].get<std::string>() + ',' + fmt(id["nu0"].get<double>()) + ',' +
                         (id["prior_mean"].is_null() ? std::string() : fmt(id["prior_mean"].get<double>())) + ',' +
                         std::to_string(t) + ',' + std::to_string(l.stopping_number()) + '\n';
            };
            tasks.push_back(std::move(task));
        }
    return [&cfg](const std::vector<Task>& tasks, ExperimentResult& r) {
        r.summary["by_setting"] = aggregate(r.records, {"prior", "nu0", "prior_mean"}, {"n_hat"});
        r.series["prior_sweep.csv"] =
            csv_header(cfg, r.config_hash, "prior,nu0,prior_mean,trial,n_hat") + collect_series(tasks);
    };
}

// Quench four learners on draws from `spec`, fit the repair and score it on
// the research set and on a fresh sample of equal size.
void quench_and_repair(const ExperimentConfig& cfg, const MixtureModelSpec& spec, std::uint64_t seed, json& rec,
                       QuenchRun* out_run = nullptr) {
    Rng rng = Rng::substream(seed, 0);
    const auto [lo, hi] = spec.range();
    auto learners = make_learners(cfg, make_prior(cfg, lo, hi, cfg.nu0));
    QuenchRun run = sample_until_quenched(spec, learners, rng, cfg.draw_cap);
    const RepairModel model = fit_repair_model(pointers(learners), spec.weights, cfg.snap_vertices);

    const ResearchDataset post = repair_dataset(model, run.data, Rng::derive_seed(seed, 1));
    const auto fr = e_hat(run.data, post, cfg.hist);
    const auto dm = damage(run.data, post, cfg.hist);

    Rng off_rng = Rng::substream(seed, 2);
    const ResearchDataset off = segment(sample_labelled(spec, run.data.total(), off_rng));
    const ResearchDataset off_post = repair_dataset(model, off, Rng::derive_seed(seed, 3));
    const auto fo = e_hat(off, off_post, cfg.hist);
    const auto dmo = damage(off, off_post, cfg.hist);

    rec["n_hat"] = stopping_json(run.stopping);
    rec["draws"] = run.draws;
    rec["representation_bias"] = bias_flags(spec.weights, run.stopping);
    rec["on_e_pre"] = fr.pre.total;
    rec["on_log_e_hat"] = num_or_null(fr.log_e_hat);
    rec["on_damage"] = dm.total;
    rec["off_log_e_hat"] = num_or_null(fo.log_e_hat);
    rec["off_damage"] = dmo.total;
    if (out_run) *out_run = std::move(run);
}

Finish rb_sweep(const ExperimentConfig& cfg, std::vector<Task>& tasks) {
    for (double p : cfg.pr_u0_grid)
        for (int t = 0; t < cfg.trials; ++t) {
            Task task;
            task.rec = {{"pr_u0", p}, {"trial", t}};
            task.seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
            task.run = [&cfg, p](json& rec, std::string&, std::uint64_t seed) {
                MixtureModelSpec spec = rb_model(p);
                if (cfg.model) {
                    spec = mixture_from_json(*cfg.model, spec);
                    spec.weights = AttributeWeights::from_conditionals(p, 0.5, 0.5);
                }
                quench_and_repair(cfg, spec, seed, rec);
            };
            tasks.push_back(std::move(task));
        }
    return [&cfg](const std::vector<Task>&, ExperimentResult& r) {
        const json agg =
            aggregate(r.records, {"pr_u0"}, {"on_log_e_hat", "on_damage", "off_log_e_hat", "off_damage"});
        r.summary["by_pr_u0"] = agg;
        std::string csv = csv_header(cfg, r.config_hash,
                                     "pr_u0,trials,failures,log_e_hat_mean,log_e_hat_std,damage_mean,damage_std");
        for (const auto& row : agg)
            csv += fmt(row["pr_u0"].get<double>()) + ',' + row["trials"].dump() + ',' + row["failures"].dump() + ',' +
                   fmt(row["on_log_e_hat"]["mean"].get<double>()) + ',' +
                   fmt(row["on_log_e_hat"]["std"].get<double>()) + ',' +
                   fmt(row["on_damage"]["mean"].get<double>()) + ',' + fmt(row["on_damage"]["std"].get<double>()) +
                   '\n';
        r.series["rb_sweep.csv"] = csv;
    };
}

Finish benchmark_gmm(const ExperimentConfig& cfg, std::vector<Task>& tasks) {
    const MixtureModelSpec spec =
        cfg.model ? mixture_from_json(*cfg.model, intersectional_model()) : intersectional_model();
    for (int t = 0; t < cfg.trials; ++t) {
        Task task;
        task.rec = {{"trial", t}};
        task.seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
        task.run = [&cfg, spec](json& rec, std::string&, std::uint64_t seed) {
            QuenchRun run;
            quench_and_repair(cfg, spec, seed, rec, &run);
            // Baseline: same total size, population composition.
            Rng rng = Rng::substream(seed, 4);
            const ResearchDataset biased = biased_sample(spec, run.stopping, rng);
            const QuantileRepairModel g = fit_geometric(biased);
            const ResearchDataset gpost = repair_geometric(g, biased);
            rec["geo_on_log_e_hat"] = num_or_null(e_hat(biased, gpost, cfg.hist).log_e_hat);
            rec["geo_on_damage"] = damage(biased, gpost, cfg.hist).total;
            Rng off_rng = Rng::substream(seed, 2);
            const ResearchDataset off = segment(sample_labelled(spec, run.data.total(), off_rng));
            const std::size_t refused = geometric_refusals(g, off);
            rec["geo_off_refused"] = refused;
            rec["geo_off_total"] = off.total();
        };
        tasks.push_back(std::move(task));
    }
    return [](const std::vector<Task>&, ExperimentResult& r) {
        const json agg = aggregate(r.records, {},
                                   {"on_log_e_hat", "on_damage", "off_log_e_hat", "off_damage", "geo_on_log_e_hat",
                                    "geo_on_damage", "geo_off_refused", "geo_off_total"});
        if (agg.empty()) return;
        const json& a = agg.at(0);
        r.summary["trials"] = a["trials"];
        r.summary["failures"] = a["failures"];
        r.summary["table"] = json::array(
            {{{"method", "geometric"},
              {"on_log_e_hat", a["geo_on_log_e_hat"]},
              {"on_damage", a["geo_on_damage"]},
              {"off_refused", a["geo_off_refused"]},
              {"off_total", a["geo_off_total"]}},
             {{"method", "ours"},
              {"on_log_e_hat", a["on_log_e_hat"]},
              {"on_damage", a["on_damage"]},
              {"off_log_e_hat", a["off_log_e_hat"]},
              {"off_damage", a["off_damage"]}}});
    };
}

struct AdultCorpus {
    std::string feature;
    AdultLoad load;
    AttributeWeights weights;
};

Finish adult(const ExperimentConfig& cfg, std::vector<Task>& tasks, ExperimentResult& r) {
    std::vector<std::filesystem::path> paths(cfg.adult_paths.begin(), cfg.adult_paths.end());
    auto corpora = std::make_shared<std::vector<AdultCorpus>>();
    for (const auto& f : cfg.features) {
        AdultCorpus c{f, load_adult(paths, parse_adult_feature(f)), {}};
        c.weights = empirical_weights(segment(c.load.records));
        r.summary["corpus"][f] = {{"rows", c.load.rows_read},
                                  {"records", c.load.records.size()},
                                  {"dropped_missing", c.load.dropped_missing},
                                  {"rejected", c.load.rejected},
                                  {"weights", c.weights.values()}};
        corpora->push_back(std::move(c));
    }
    for (std::size_t fi = 0; fi < corpora->size(); ++fi)
        for (int t = 0; t < cfg.trials; ++t) {
            Task task;
            task.rec = {{"feature", (*corpora)[fi].feature}, {"trial", t}};
            task.seed = Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t));
            task.run = [&cfg, corpora, fi](json& rec, std::string&, std::uint64_t seed) {
                const AdultCorpus& c = (*corpora)[fi];
                Rng rng = Rng::substream(seed, 0);
                auto [train, hold] = split_holdout(c.load.records, cfg.holdout_fraction, rng);
                shuffle(train, rng);

                double lo = INFINITY, hi = -INFINITY;
                for (const auto& d : train) {
                    lo = std::min(lo, d.x);
                    hi = std::max(hi, d.x);
                }
                const double pad = cfg.adult_padding * std::max(hi - lo, 1.0);
                auto learners = make_learners(cfg, make_prior(cfg, lo - pad, hi + pad, cfg.nu0));
                PerSubgroup<std::vector<double>> absorbed;
                for (const auto& d : train) {
                    auto& l = learners[SubgroupKey{d.u, d.s}.index()];
                    if (l.quenched()) continue;
                    l.absorb(d.x);
                    absorbed[SubgroupKey{d.u, d.s}.index()].push_back(d.x);
                    if (std::all_of(learners.begin(), learners.end(),
                                    [](const SubgroupLearner& x) { return x.quenched(); }))
                        break;
                }
                for (auto key : kSubgroups)
                    if (!learners[key.index()].quenched())
                        throw NonConvergenceError("subgroup " + key.label() + " ran out of training data after " +
                                                  std::to_string(learners[key.index()].k()) + " records");
                PerSubgroup<std::int64_t> n_hat{};
                for (auto key : kSubgroups) n_hat[key.index()] = learners[key.index()].stopping_number();
                const ResearchDataset research(absorbed);
                const RepairModel model = fit_repair_model(pointers(learners), c.weights, cfg.snap_vertices);

                const auto score = [&](const ResearchDataset& d, std::uint64_t id, const char* prefix) {
                    const ResearchDataset post = repair_dataset(model, d, Rng::derive_seed(seed, id));
                    const auto fr = e_hat(d, post, cfg.hist);
                    rec[std::string(prefix) + "_e_pre"] = fr.pre.total;
                    rec[std::string(prefix) + "_e_hat"] = fr.e_hat;
                    rec[std::string(prefix) + "_damage"] = damage(d, post, cfg.hist).total;
                };
                const ResearchDataset train_set = segment(train);
                const ResearchDataset hold_set = segment(hold);
                rec["n_hat"] = stopping_json(n_hat);
                rec["distinct"] = json::array();
                for (const auto& l : learners) rec["distinct"].push_back(l.vertices().size());
                rec["representation_bias"] = bias_flags(c.weights, n_hat);
                score(research, 1, "on");
                score(train_set, 2, "train");
                score(hold_set, 3, "off");

                // Baseline on a sample of the research set's size with the
                // corpus composition, taken from the shuffled training part.
                const auto counts =
                    biased_counts(c.weights, std::accumulate(n_hat.begin(), n_hat.end(), std::int64_t{0}));
                PerSubgroup<std::vector<double>> biased;
                for (auto key : kSubgroups) {
                    const auto& g = train_set.group(key);
                    const auto n = std::min<std::size_t>(g.size(), static_cast<std::size_t>(counts[key.index()]));
                    biased[key.index()].assign(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(n));
                }
                const ResearchDataset bset(biased);
                const QuantileRepairModel geo = fit_geometric(bset);
                rec["geo_on_e_hat"] = e_hat(bset, repair_geometric(geo, bset), cfg.hist).e_hat;
                rec["geo_off_refused"] = geometric_refusals(geo, hold_set);
                rec["geo_off_total"] = hold_set.total();
            };
            tasks.push_back(std::move(task));
        }
    return [](const std::vector<Task>&, ExperimentResult& r) {
        r.summary["by_feature"] =
            aggregate(r.records, {"feature"},
                      {"on_e_hat", "on_damage", "train_e_hat", "train_damage", "off_e_hat", "off_damage",
                       "geo_on_e_hat", "geo_off_refused", "geo_off_total"});
    };
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult r;
    r.config = cfg.to_json();
    r.config_hash = cfg.hash();
    r.summary = json::object();
    std::vector<Task> tasks;
    Finish finish;
    const auto& id = cfg.experiment;
    if (id == "stopping-categorical") finish = stopping_categorical(cfg, tasks);
    else if (id == "stopping-gmm") finish = stopping_gmm(cfg, tasks);
    else if (id == "prior-sweep") finish = prior_sweep(cfg, tasks);
    else if (id == "rb-sweep") finish = rb_sweep(cfg, tasks);
    else if (id == "benchmark-gmm") finish = benchmark_gmm(cfg, tasks);
    else finish = adult(cfg, tasks, r);

    for (auto& t : tasks) {
        t.rec["seed"] = t.seed;
        t.rec["config_hash"] = r.config_hash;
    }
    run_tasks(tasks, cfg.threads);
    for (const auto& t : tasks) {
        r.records.push_back(t.rec);
        r.wall_seconds.push_back(t.wall);
    }
    finish(tasks, r);
    std::size_t failed = 0;
    for (const auto& rec : r.records) failed += rec.at("failed").get<bool>() ? 1 : 0;
    r.summary["experiment"] = cfg.experiment;
    r.summary["config_hash"] = r.config_hash;
    r.summary["seed"] = cfg.seed;
    r.summary["records"] = r.records.size();
    r.summary["failed"] = failed;
    r.summary["rng"] = std::string(Rng::name());
    r.summary["estimator"] = {{"bins", cfg.hist.bins}, {"lambda", cfg.hist.lambda}, {"log_base", "e"}};
    return r;
}

void write_outputs(const ExperimentResult& r, const std::string& dir, bool timings) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    auto open = [&](const std::string& name) {
        std::ofstream f(fs::path(dir) / name, std::ios::binary);
        if (!f) throw DataError("cannot write " + (fs::path(dir) / name).string());
        return f;
    };
    {
        json c = r.config;
        c["config_hash"] = r.config_hash;
        open("config.json") << c.dump(2) << '\n';
    }
    {
        auto f = open("records.jsonl");
        for (const auto& rec : r.records) f << rec.dump() << '\n';
    }
    open("summary.json") << r.summary.dump(2) << '\n';
    for (const auto& [name, text] : r.series) open(name) << text;
    if (timings) {
        auto f = open("timings.csv");
        f << "# wall-clock seconds per record; not reproducible by design\nrecord,seconds\n";
        for (std::size_t i = 0; i < r.wall_seconds.size(); ++i) f << i << ',' << r.wall_seconds[i] << '\n';
    }
}

}  // namespace sbr
