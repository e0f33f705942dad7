// sbrepair: fit, apply and evaluate attribute-conditional repairs, and run
// the simulation/Adult experiments.
//
// exit codes: 0 ok, 1 usage or config, 2 data error, 3 non-convergence

#include <CLI11.hpp>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <sstream>

#include "sbr/errors.hpp"
#include "sbr/experiment.hpp"
#include "sbr/ingest.hpp"
#include "sbr/labelled_csv.hpp"
#include "sbr/metrics.hpp"
#include "sbr/ot_repair.hpp"
#include "sbr/simgen.hpp"
#include "sbr/snapshot.hpp"

using namespace sbr;

namespace {

struct Overrides {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    std::optional<double> epsilon;
    std::optional<double> nu0;
    std::optional<int> bins;
};

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

json apply(json j, const Overrides& o) {
    if (o.seed) j["seed"] = *o.seed;
    if (o.trials) j["trials"] = *o.trials;
    if (o.epsilon) j["epsilon"] = *o.epsilon;
    if (o.nu0) j["nu0"] = *o.nu0;
    if (o.bins) j["bins"] = *o.bins;
    return j;
}

ExperimentConfig knobs(const Overrides& o) {
    json j = o.config.empty() ? json::object() : read_json(o.config);
    return ExperimentConfig::knobs_from_json(apply(std::move(j), o));
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    if (const auto parent = std::filesystem::path(path).parent_path(); !parent.empty())
        std::filesystem::create_directories(parent);
    std::ofstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot write " + path);
    f << text;
}

void add_common(CLI::App* c, Overrides& o) {
    c->add_option("--config", o.config, "JSON config file");
    c->add_option("--seed", o.seed, "master seed");
    c->add_option("--epsilon", o.epsilon, "stopping threshold");
    c->add_option("--nu0", o.nu0, "prior confidence");
    c->add_option("--bins", o.bins, "histogram bins for the metrics");
}

// fit: quench one learner per subgroup on the CSV rows in order, build the
// repair model and write it with the learners and a stopping report.
int cmd_fit(const Overrides& o, const std::string& input, const std::string& out) {
    const ExperimentConfig cfg = knobs(o);
    const auto table = read_labelled_csv(input);
    const ResearchDataset data = segment(table.rows);
    if (data.total() == 0) throw DataError("no rows in " + input);
    double lo = INFINITY, hi = -INFINITY;
    for (const auto& d : table.rows) {
        lo = std::min(lo, d.x);
        hi = std::max(hi, d.x);
    }
    const double pad = cfg.adult_padding * std::max(hi - lo, 1.0);
    PriorSpec prior = PriorSpec::uniform(lo - pad, hi + pad, cfg.nu0);
    if (cfg.prior) {
        const auto& p = *cfg.prior;
        prior = p.at("kind") == "gaussian"
                    ? PriorSpec::gaussian(p.at("mean").get<double>(), p.at("sd").get<double>(), cfg.nu0)
                    : PriorSpec::uniform(p.value("x_min", prior.a), p.value("x_max", prior.b), cfg.nu0);
    }
    PerSubgroup<std::optional<SubgroupLearner>> learners;
    for (auto key : kSubgroups) learners[key.index()].emplace(prior, cfg.learner_for(key));
    for (const auto& d : table.rows) {
        auto& l = *learners[SubgroupKey{d.u, d.s}.index()];
        if (!l.quenched()) l.absorb(d.x);
    }
    json report;
    for (auto key : kSubgroups) {
        const auto& l = *learners[key.index()];
        if (data.count(key) == 0) throw InsufficientSupportError("subgroup " + key.label() + " has no rows");
        if (!l.quenched())
            throw NonConvergenceError("subgroup " + key.label() + " did not quench on its " +
                                      std::to_string(l.k()) + " rows (smoothed statistic " +
                                      format_double(l.smoothed_kld()) + ")");
    }
    const AttributeWeights w = empirical_weights(data);
    const PerSubgroup<const SubgroupLearner*> ptrs{&*learners[0], &*learners[1], &*learners[2], &*learners[3]};
    const RepairModel model = fit_repair_model(ptrs, w, cfg.snap_vertices);

    json snap = model_to_json(model);
    snap["learners"] = json::array();
    for (const auto* l : ptrs) snap["learners"].push_back(learner_to_json(*l));
    snap["config_hash"] = cfg.hash();
    snap["seed"] = cfg.seed;
    write_text(out, snap.dump() + "\n");

    PerSubgroup<std::int64_t> n_hat{};
    std::int64_t total = 0;
    for (auto key : kSubgroups) total += n_hat[key.index()] = ptrs[key.index()]->stopping_number();
    report["config_hash"] = cfg.hash();
    report["seed"] = cfg.seed;
    report["rows"] = data.total();
    report["weights"] = w.values();
    report["subgroups"] = json::array();
    for (auto key : kSubgroups) {
        const auto& l = *ptrs[key.index()];
        report["subgroups"].push_back(
            {{"u", key.u},
             {"s", key.s},
             {"rows", data.count(key)},
             {"n_hat", l.stopping_number()},
             {"distinct", l.vertices().size()},
             {"out_of_support", l.out_of_support()},
             // Definition 1 at the input's size, and at a sample of size
             // sum(n_hat) drawn with the input's weights.
             {"representation_bias", has_representation_bias(key, w, static_cast<std::int64_t>(data.total()),
                                                             l.stopping_number())},
             {"representation_bias_at_total_n_hat", has_representation_bias(key, w, total, l.stopping_number())}});
    }
    write_text(out == "-" ? "-" : out + ".report.json", report.dump(2) + "\n");
    return 0;
}

int cmd_repair(const Overrides& o, const std::string& model_path, const std::string& input, const std::string& out,
               unsigned threads) {
    const std::uint64_t seed = o.seed.value_or(0);
    const json snap = read_json(model_path);
    const RepairModel model = model_from_json(snap);
    const auto table = read_labelled_csv(input);
    const auto repaired = repair_batch(model, table.rows, seed, threads);
    std::vector<double> xr;
    xr.reserve(repaired.size());
    for (const auto& d : repaired) xr.push_back(d.x);
    std::ostringstream os;
    write_labelled_csv(os, table.rows, &xr,
                       {"model_hash=" + fnv1a_hex(snap.dump()) + " model_config_hash=" +
                            snap.value("config_hash", std::string()) + " seed=" + std::to_string(seed)});
    write_text(out, os.str());
    return 0;
}

int cmd_evaluate(const Overrides& o, const std::string& pre_path, std::string post_path, const std::string& out) {
    const ExperimentConfig cfg = knobs(o);
    const auto pre = read_labelled_csv(pre_path);
    std::vector<LabelledDatum> post_rows;
    if (post_path.empty()) {
        if (!pre.repaired) throw SchemaError("no --post file and no x_repaired column in " + pre_path);
        post_rows = pre.rows;
        for (std::size_t i = 0; i < post_rows.size(); ++i) post_rows[i].x = (*pre.repaired)[i];
    } else {
        const auto post = read_labelled_csv(post_path);
        post_rows = post.rows;
        if (post.repaired)
            for (std::size_t i = 0; i < post_rows.size(); ++i) post_rows[i].x = (*post.repaired)[i];
    }
    if (post_rows.size() != pre.rows.size()) throw DataError("pre and post have different row counts");
    for (std::size_t i = 0; i < post_rows.size(); ++i)
        if (post_rows[i].u != pre.rows[i].u || post_rows[i].s != pre.rows[i].s)
            throw RecordError(i, "pre and post labels differ");
    const ResearchDataset a = segment(pre.rows);
    const ResearchDataset b = segment(post_rows);
    const auto fr = e_hat(a, b, cfg.hist);
    const auto dm = damage(a, b, cfg.hist);
    json j;
    j["config_hash"] = cfg.hash();
    j["seed"] = cfg.seed;
    j["estimator"] = {{"kind", "histogram"}, {"bins", cfg.hist.bins}, {"lambda", cfg.hist.lambda}, {"log_base", "e"}};
    j["fairness"] = {{"e_pre", fr.pre.total},
                     {"e_pre_u", fr.pre.per_u},
                     {"e_post", fr.post.total},
                     {"e_post_u", fr.post.per_u},
                     {"e_hat", fr.e_hat},
                     {"log_e_hat", std::isfinite(fr.log_e_hat) ? json(fr.log_e_hat) : json(nullptr)}};
    j["damage"] = {{"per_group", dm.per_group}, {"total", dm.total}};
    write_text(out, j.dump(2) + "\n");
    return 0;
}

int cmd_experiment(const Overrides& o, const std::string& out, bool timings, std::optional<unsigned> threads) {
    if (o.config.empty()) throw ConfigError("experiment needs --config");
    json j = apply(read_json(o.config), o);
    if (threads) j["threads"] = *threads;
    const ExperimentConfig cfg = ExperimentConfig::from_json(j);
    const ExperimentResult r = run_experiment(cfg);
    write_outputs(r, out, timings);
    std::cerr << cfg.experiment << ": " << r.records.size() << " records, " << r.summary["failed"] << " failed -> "
              << out << "\n";
    return 0;
}

int cmd_simulate(const Overrides& o, const std::string& model, double pr_u0, std::size_t n, const std::string& out) {
    const std::uint64_t seed = o.seed.value_or(0);
    MixtureModelSpec spec;
    if (model == "rb")
        spec = rb_model(pr_u0);
    else if (model == "intersectional")
        spec = intersectional_model();
    else
        throw ConfigError("unknown model '" + model + "' (rb, intersectional)");
    Rng rng(seed);
    const auto rows = sample_labelled(spec, n, rng);
    std::ostringstream os;
    write_labelled_csv(os, rows, nullptr,
                       {"model=" + model + (model == "rb" ? " pr_u0=" + format_double(pr_u0) : std::string()) +
                        " seed=" + std::to_string(seed) + " rng=" + std::string(Rng::name())});
    write_text(out, os.str());
    return 0;
}

int cmd_ingest(const std::string& dir, const std::string& feature, const std::string& out) {
    const auto load = load_adult({std::filesystem::path(dir) / "adult.data", std::filesystem::path(dir) / "adult.test"},
                                 parse_adult_feature(feature), [](const std::string& m) { std::cerr << m << "\n"; });
    std::ostringstream os;
    write_labelled_csv(os, load.records, nullptr, {"adult feature=" + feature});
    write_text(out, os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sbrepair: stopping-rule learning and optimal-transport repair"};
    app.require_subcommand(1);
    Overrides o;
    std::string input, out, model_path, pre, post, sim_model = "intersectional", data_dir = "data/adult",
                                                feature = "age";
    std::optional<unsigned> threads;
    bool timings = false;
    double pr_u0 = 0.5;
    std::size_t n = 1000;

    auto* fit = app.add_subcommand("fit", "quench subgroup learners on a labelled CSV and save a repair model");
    add_common(fit, o);
    fit->add_option("input", input, "labelled CSV (x,u,s)")->required();
    fit->add_option("--out", out, "model snapshot path")->required();

    auto* rep = app.add_subcommand("repair", "apply a saved model to a labelled CSV");
    rep->add_option("--model", model_path, "model snapshot")->required();
    rep->add_option("input", input, "labelled CSV")->required();
    rep->add_option("--seed", o.seed, "repair seed");
    rep->add_option("--out", out, "output CSV (default stdout)");
    rep->add_option("--threads", threads, "worker threads");

    auto* ev = app.add_subcommand("evaluate", "fairness and damage reports for a pre/post pair");
    add_common(ev, o);
    ev->add_option("pre", pre, "original labelled CSV (or a repair output)")->required();
    ev->add_option("post", post, "repaired CSV; omit to use the x_repaired column of pre");
    ev->add_option("--out", out, "report path (default stdout)");

    auto* ex = app.add_subcommand("experiment", "run a configured experiment");
    add_common(ex, o);
    ex->add_option("--trials", o.trials, "Monte-Carlo trials");
    ex->add_option("--out", out, "output directory")->required();
    ex->add_option("--threads", threads, "worker threads");
    ex->add_flag("--timings", timings, "also write wall-clock timings.csv");

    auto* sim = app.add_subcommand("simulate", "draw a labelled CSV from a built-in model");
    sim->add_option("--model", sim_model, "rb or intersectional");
    sim->add_option("--pr-u0", pr_u0, "Pr[U=0] for the rb model");
    sim->add_option("-n,--n", n, "rows");
    sim->add_option("--seed", o.seed, "seed");
    sim->add_option("--out", out, "output CSV (default stdout)");

    auto* ing = app.add_subcommand("ingest-adult", "encode the Adult corpus as a labelled CSV");
    ing->add_option("--data-dir", data_dir, "directory with adult.data and adult.test");
    ing->add_option("--feature", feature, "age, capital_gain or capital_loss");
    ing->add_option("--out", out, "output CSV (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*fit) return cmd_fit(o, input, out);
        if (*rep) return cmd_repair(o, model_path, input, out, threads.value_or(1));
        if (*ev) return cmd_evaluate(o, pre, post, out);
        if (*ex) return cmd_experiment(o, out, timings, threads);
        if (*sim) return cmd_simulate(o, sim_model, pr_u0, n, out);
        if (*ing) return cmd_ingest(data_dir, feature, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const NonConvergenceError& e) {
        std::cerr << "non-convergence: " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
