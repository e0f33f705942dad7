#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "oracles.hpp"
#include "sbr/errors.hpp"
#include "sbr/experiment.hpp"
#include "sbr/ingest.hpp"
#include "sbr/labelled_csv.hpp"
#include "sbr/simgen.hpp"
#include "sbr/snapshot.hpp"

namespace fs = std::filesystem;
using namespace sbr;

namespace {

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("sbr-test-" + std::to_string(::getpid())) / name;
    fs::create_directories(p.parent_path());
    return p;
}

PerSubgroup<SubgroupLearner> learners(const PriorSpec& prior, LearnerConfig c = {}) {
    return {SubgroupLearner(prior, c), SubgroupLearner(prior, c), SubgroupLearner(prior, c), SubgroupLearner(prior, c)};
}

}  // namespace

TEST_CASE("categorical law") {
    const CategoricalSpec c(5);
    CHECK(c.support() == std::vector<double>{-5, -3, -1, 1, 3, 5});
    const auto& p = c.probabilities();
    CHECK(p.back() == 0.0);
    double s = 0.0;
    for (double v : p) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-14));
    const double z = std::erf(5.0 / std::sqrt(2.0));
    CHECK(p[2] == doctest::Approx(0.5 * (std::erf(1 / std::sqrt(2.0)) - std::erf(-1 / std::sqrt(2.0))) / z));
    Rng rng(3);
    for (int i = 0; i < 1000; ++i) CHECK(c.sample(rng) != 5.0);
}

TEST_CASE("mixture specs") {
    const auto rb = rb_model(0.5);
    CHECK(rb.laws[1].means[0] == 1.0);
    CHECK(rb.laws[2].sds[0] == 1.2);
    const auto ix = intersectional_model();
    CHECK(ix.weights.p({1, 0}) == doctest::Approx(0.42));
    const auto g = minority_gmm();
    CHECK(g.mean() == doctest::Approx(-1.8));
    CHECK(g.variance() == doctest::Approx(0.8 * 1 + 0.2 * 0.25 + 0.8 * 0.64 + 0.2 * 10.24));

    Rng rng(21);
    const auto d = segment(sample_labelled(rb, 100000, rng));
    for (auto key : kSubgroups) {
        const double f = d.count(key) / 1e5;
        CHECK(std::abs(f - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / 1e5));
    }
    GmmSpec bad{{0.5, 0.6}, {0, 1}, {1, 1}};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("sampling until every learner quenches") {
    auto ls = learners(PriorSpec::uniform(-8, 8, 0.001));
    Rng rng(4);
    const auto run = sample_until_quenched(rb_model(0.025), ls, rng);
    for (auto key : kSubgroups) {
        CHECK(ls[key.index()].quenched());
        CHECK(run.data.count(key) == static_cast<std::size_t>(run.stopping[key.index()]));
    }
    // the rare subgroups need far more draws but not more data
    CHECK(run.draws > 10 * (run.stopping[0] + run.stopping[1]));

    LearnerConfig loose;
    loose.epsilon = 1e300;
    auto fast = learners(PriorSpec::uniform(-8, 8, 0.001), loose);
    Rng r2(5);
    const auto quick = sample_until_quenched(rb_model(0.5), fast, r2);
    for (auto n : quick.stopping) CHECK(n == loose.k_min);

    auto spec = rb_model(0.5);
    spec.weights = AttributeWeights({0.0, 0.5, 0.25, 0.25});
    auto stuck = learners(PriorSpec::uniform(-8, 8, 0.001));
    Rng r3(6);
    CHECK_THROWS_AS(sample_until_quenched(spec, stuck, r3, 20000), NonConvergenceError);
}

TEST_CASE("biased sample counts") {
    CHECK(biased_counts(AttributeWeights::uniform(), 400) == PerSubgroup<std::int64_t>{100, 100, 100, 100});
    CHECK(biased_counts(intersectional_model().weights, 1000) == PerSubgroup<std::int64_t>{180, 120, 420, 280});
    const auto rare = biased_counts(rb_model(0.025).weights, 1000);
    CHECK(rare[0] >= 12);
    CHECK(rare[0] <= 13);

    int warned = 0;
    Rng rng(1);
    auto spec = rb_model(0.5);
    spec.weights = AttributeWeights({0.0, 0.5, 0.25, 0.25});
    const auto d = biased_sample(spec, {10, 10, 10, 10}, rng, [&](const std::string&) { ++warned; });
    CHECK(warned == 1);
    CHECK(d.count({0, 0}) == 0);

    Rng a(9), b(9);
    CHECK(biased_sample(intersectional_model(), {50, 60, 70, 80}, a) ==
          biased_sample(intersectional_model(), {50, 60, 70, 80}, b));
}

TEST_CASE("Adult encoding") {
    const auto path = scratch("adult.sample");
    std::ofstream(path) << "|1x3 Cross validator\n"
                           "\n"
                           "37, Private, 284582, Bachelors, 13, Married-civ-spouse, Exec-managerial, Wife, White, "
                           "Female, 0, 0, 40, United-States, <=50K.\n"
                           "50, Self-emp, 83311, HS-grad, 9, Married-civ-spouse, Exec-managerial, Husband, White, "
                           "Male, 0, 0, 13, United-States, <=50K\n"
                           "?, ?, 1, HS-grad, 9, Divorced, ?, Unmarried, White, Male, 0, 0, 13, ?, <=50K\n";
    const auto load = load_adult({path}, AdultFeature::age);
    REQUIRE(load.records.size() == 2);
    CHECK(load.records[0] == LabelledDatum{37, 1, 0});
    CHECK(load.records[1] == LabelledDatum{50, 0, 1});
    CHECK(load.dropped_missing == 1);
    // age is always checked, so every feature sees the same rows
    CHECK(load_adult({path}, AdultFeature::capital_gain).records.size() == 2);

    const auto bad = scratch("adult.bad");
    std::ofstream(bad) << "37, Private, 284582\n";
    try {
        load_adult({bad}, AdultFeature::age);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 1);
    }
    CHECK_THROWS_AS(parse_adult_feature("hours"), ConfigError);
    CHECK(to_string(parse_adult_feature("capital_loss")) == "capital_loss");
}

TEST_CASE("Adult corpus on disk") {
    const fs::path dir = SBR_ADULT_DIR;
    if (!fs::exists(dir / "adult.data")) {
        MESSAGE("Adult corpus not present; skipped");
        return;
    }
    const auto load = load_adult({dir / "adult.data", dir / "adult.test"}, AdultFeature::age);
    CHECK(load.records.size() == 48842);
    const auto w = empirical_weights(segment(load.records));
    const std::array<double, 4> want{0.146, 0.310, 0.187, 0.357};
    for (std::size_t i = 0; i < 4; ++i) CHECK(std::abs(w.values()[i] - want[i]) <= 0.01);
}

TEST_CASE("stratified holdout split") {
    std::vector<LabelledDatum> data;
    for (int i = 0; i < 4000; ++i) data.push_back({static_cast<double>(i), i % 4 / 2, i % 2});
    Rng a(3), b(3);
    const auto [train, hold] = split_holdout(data, 0.5, a);
    const auto dt = segment(train), dh = segment(hold);
    for (auto key : kSubgroups) {
        CHECK(std::abs(static_cast<long>(dt.count(key)) - 500) <= 1);
        CHECK(std::abs(static_cast<long>(dh.count(key)) - 500) <= 1);
    }
    CHECK(std::is_sorted(train.begin(), train.end(), [](auto& x, auto& y) { return x.x < y.x; }));
    const auto again = split_holdout(data, 0.5, b);
    CHECK(again.first == train);
    Rng c(4);
    CHECK_THROWS_AS(split_holdout(std::vector<LabelledDatum>{{1, 0, 0}, {2, 0, 1}, {3, 1, 0}, {4, 1, 1}}, 0.5, c),
                    SplitError);
}

TEST_CASE("labelled CSV") {
    std::istringstream ok("# comment\ns,x,u,extra\n1,0.5,0,zz\n0,-2,1,zz\n");
    const auto t = read_labelled_csv(ok);
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[0] == LabelledDatum{0.5, 0, 1});
    CHECK_FALSE(t.repaired.has_value());

    std::istringstream missing("x,u\n1,0\n");
    CHECK_THROWS_AS(read_labelled_csv(missing), SchemaError);
    std::istringstream bad("x,u,s\n1,0,0\nfoo,0,1\n");
    try {
        read_labelled_csv(bad);
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }

    std::ostringstream out;
    const std::vector<double> rep{0.1, 1.0 / 3.0};
    write_labelled_csv(out, t.rows, &rep, {"seed=1"});
    std::istringstream back(out.str());
    const auto t2 = read_labelled_csv(back);
    CHECK(t2.rows == t.rows);
    CHECK(*t2.repaired == rep);
    CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("snapshots round trip to identical repairs") {
    auto ls = learners(PriorSpec::uniform(-10, 10, 0.001));
    Rng rng(14);
    const auto spec = intersectional_model();
    const auto run = sample_until_quenched(spec, ls, rng);
    const auto model = fit_repair_model({&ls[0], &ls[1], &ls[2], &ls[3]}, empirical_weights(run.data));
    const auto text = model_to_json(model).dump();
    const auto back = model_from_json(json::parse(text));
    const auto recs = run.data.records();
    CHECK(repair_batch(model, recs, 5) == repair_batch(back, recs, 5));
    CHECK(model_to_json(back).dump() == text);

    const auto lj = learner_to_json(ls[2]);
    CHECK(learner_from_json(json::parse(lj.dump())).state() == ls[2].state());
    CHECK_THROWS_AS(check_format(lj, "sbr-model"), ConfigError);

    const auto geo = fit_geometric(run.data);
    CHECK(geometric_from_json(json::parse(geometric_to_json(geo).dump())).sorted == geo.sorted);
}

TEST_CASE("experiment configuration") {
    const json j{{"experiment", "stopping-categorical"}, {"seed", 3}, {"trials", 2}, {"q_grid", {5, 10}}};
    const auto c = ExperimentConfig::from_json(j);
    CHECK(c.hash() == ExperimentConfig::from_json(json::parse(j.dump())).hash());
    auto d = c;
    d.seed = 4;
    CHECK(d.hash() != c.hash());
    d = c;
    d.threads = 7;
    CHECK(d.hash() == c.hash());

    CHECK_THROWS_AS(ExperimentConfig::from_json({{"experiment", "rb-sweep"}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"experiment", "rb-sweep"}, {"seed", 1}, {"tirals", 3}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"experiment", "nope"}, {"seed", 1}}), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_json({{"experiment", "rb-sweep"}, {"seed", 1}, {"pr_u0_grid", {0.0}}}),
                    ConfigError);
    CHECK(ExperimentConfig::from_json(
              {{"experiment", "rb-sweep"}, {"seed", 1}, {"epsilon_by_group", {{"0,1", 0.02}}}})
              .learner_for({0, 1})
              .epsilon == 0.02);
}

TEST_CASE("experiments are deterministic and thread independent") {
    auto c = ExperimentConfig::from_json(
        {{"experiment", "benchmark-gmm"}, {"seed", 11}, {"trials", 2}});
    c.threads = 1;
    const auto a = run_experiment(c);
    c.threads = 2;
    const auto b = run_experiment(c);
    CHECK(json(a.records).dump() == json(b.records).dump());
    CHECK(a.summary.dump() == b.summary.dump());
    CHECK(a.series == b.series);

    auto z = ExperimentConfig::from_json({{"experiment", "rb-sweep"}, {"seed", 1}, {"trials", 0}});
    const auto empty = run_experiment(z);
    CHECK(empty.records.empty());
    CHECK(empty.summary.at("records") == 0);
}

TEST_CASE("CLI exit codes and provenance") {
    const std::string cli = SBR_CLI_PATH;
    const auto dir = scratch("cli");
    fs::create_directories(dir);
    auto run = [&](const std::string& args) {
        const int rc = std::system((cli + " " + args + " >/dev/null 2>&1").c_str());
        return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    };
    std::ofstream(dir / "nos.csv") << "x,u\n1,0\n";
    CHECK(run("fit " + (dir / "nos.csv").string() + " --out " + (dir / "m.json").string()) == 2);
    std::ofstream(dir / "cfg.json") << R"({"experiment": "rb-sweep", "seed": 1, "bogus": 2})";
    CHECK(run("experiment --config " + (dir / "cfg.json").string() + " --out " + (dir / "e").string()) == 1);
    CHECK(run("no-such-command") != 0);

    REQUIRE(run("simulate --model intersectional -n 20000 --seed 3 --out " + (dir / "s.csv").string()) == 0);
    REQUIRE(run("fit " + (dir / "s.csv").string() + " --out " + (dir / "m.json").string()) == 0);
    REQUIRE(run("repair " + (dir / "s.csv").string() + " --model " + (dir / "m.json").string() + " --seed 2 --out " +
                (dir / "r.csv").string()) == 0);
    REQUIRE(run("evaluate " + (dir / "r.csv").string() + " --out " + (dir / "ev.json").string()) == 0);
    const auto m = json::parse(std::ifstream(dir / "m.json"));
    CHECK(m.contains("config_hash"));
    std::ifstream r(dir / "r.csv");
    std::string first;
    std::getline(r, first);
    CHECK(first.rfind("#", 0) == 0);
    CHECK(first.find("seed") != std::string::npos);
    const auto ev = json::parse(std::ifstream(dir / "ev.json"));
    CHECK(ev.dump().find("e_hat") != std::string::npos);

    std::ofstream(dir / "empty.csv") << "x,u,s\n";
    CHECK(run("repair " + (dir / "empty.csv").string() + " --model " + (dir / "m.json").string() + " --out " +
              (dir / "re.csv").string()) == 0);
    fs::remove_all(dir.parent_path());
}
