#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>

#include "oam/errors.hpp"
#include "oam/experiment.hpp"

using namespace oam;
namespace fs = std::filesystem;

namespace {

// Small single-mode setup that still interpolates well.
ExperimentConfig small_config() {
    ExperimentConfig c;
    c.train_d_count = 9;
    c.train_alpha_count = 11;
    c.test_per_class = 50;
    c.bpnn.max_epochs = 150;
    return c;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "oam_experiment_test" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args) { return std::system((std::string(OAMDETECT_CLI) + " " + args).c_str()); }

}  // namespace

TEST_CASE("configuration text round trip") {
    ExperimentConfig c = ExperimentConfig::defaults(SchemeKind::multi_mode);
    c.classes = {{0, 1}, {1, 2}, {-1, 1}};
    c.snr_db = 12.5;
    c.svm.c = 3.25;
    c.knn_metric = KnnMetric::wrapped_phase;
    c.detectors = {"knn", "bpnn"};
    c.bpnn.bayesian = false;
    ExperimentConfig d;
    d.load_text(c.to_text());
    CHECK(d.to_text() == c.to_text());
    CHECK(d.classes == c.classes);
    CHECK(d.snr_db == c.snr_db);
    CHECK(d.scheme().size() == 3);
    CHECK(d.geometry().tx.n_elements == 6);
    CHECK(ExperimentConfig{}.geometry().tx.n_elements == 8);
    CHECK(ExperimentConfig{}.scheme().size() == 7);
    CHECK(ExperimentConfig::keys().size() == 43);
}

TEST_CASE("configuration errors carry the line") {
    ExperimentConfig c;
    try {
        c.load_text("seed = 3\n# note\nsvm_c = abc\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(c.load_text("no_such_key = 1\n"), ParseError);
    CHECK_THROWS_AS(c.load_text("just words\n"), ParseError);
    CHECK_THROWS_AS(c.set("detectors", "knn,forest"), DomainError);
    c.set("classes", "5");
    CHECK_THROWS_AS(c.validate(), DomainError);
}

TEST_CASE("experiment writes its artifacts") {
    ExperimentConfig c = small_config();
    c.out_dir = scratch("run").string();
    const ExperimentResult r = run_experiment(c);
    REQUIRE(r.reports.size() == 3);
    CHECK(r.reports[0].detector == "KNN");
    CHECK(r.reports[1].detector == "SVM");
    CHECK(r.reports[2].detector == "BPNN");
    CHECK(r.train.samples.size() == 7 * 9 * 11);
    CHECK(r.test.samples.size() == 350);
    for (const char* f : {"config.txt", "summary.json", "summary.txt", "report_knn.json", "report_svm.json",
                          "report_bpnn.json", "confusion_bpnn.csv", "predictions_svm.csv", "mse_curve_bpnn.csv",
                          "model_bpnn.json", "model_svm.json", "train_report_bpnn.json"})
        CHECK(fs::exists(fs::path(c.out_dir) / f));
    const auto table = parse_csv(summary_table(r.reports));
    CHECK(table[0] == std::vector<std::string>{"method", "accuracy", "testing_time_s"});
    CHECK(table.size() == 4);

    ExperimentConfig again;
    again.load_file((fs::path(c.out_dir) / "config.txt").string());
    CHECK(again.to_text() == c.to_text());
}

TEST_CASE("sweeps") {
    ExperimentConfig c = small_config();
    c.detectors = {"bpnn"};
    const SampleSet train = build_training_set(c);
    const TrainedDetectors t = train_detectors(c, train);

    const auto one = parse_csv(sweep(c, t, {SweepAxis::distance, 400, 400, 1, 20}));
    CHECK(one.size() == 2);
    CHECK(one[0] == std::vector<std::string>{"distance", "BPNN"});

    // inside the training ranges the network only interpolates
    c.test_d_min = 150;
    c.test_d_max = 350;
    const auto inside = parse_csv(sweep(c, t, {SweepAxis::alpha, 0, 20, 5, 100}));
    REQUIRE(inside.size() == 6);
    for (std::size_t i = 1; i < inside.size(); ++i) CHECK(std::stod(inside[i][1]) == 1.0);

    ExperimentConfig k = small_config();
    k.detectors = {"knn"};
    const TrainedDetectors tk = train_detectors(k, build_training_set(k));
    k.test_d_min = 150;
    k.test_d_max = 350;
    k.test_alpha_min_deg = 0;
    k.test_alpha_max_deg = 20;
    const auto snr = parse_csv(sweep(k, tk, {SweepAxis::snr, 0, 30, 4, 1000}));
    REQUIRE(snr.size() == 5);
    for (std::size_t i = 2; i < snr.size(); ++i) CHECK(std::stod(snr[i][1]) >= std::stod(snr[i - 1][1]) - 0.02);
    CHECK(std::stod(snr[4][1]) > std::stod(snr[1][1]));
    CHECK_THROWS_AS(sweep(k, tk, {SweepAxis::snr, 5, 0, 3, 10}), DomainError);
}

TEST_CASE("phase field files") {
    PhaseFieldSpec spec;
    spec.points = 11;
    const auto files = phase_field(ExperimentConfig{}, spec);
    CHECK(files.size() == 4);
    const auto rows = parse_csv(files.at("phasefield_lp2_a0.csv"));
    CHECK(rows.size() == 1 + 121);
    CHECK(rows[0] == std::vector<std::string>{"u", "v", "x", "y", "z", "magnitude", "phase"});
    CHECK(files.count("phasefield_lp1p2_a5.csv") == 1);
}

TEST_CASE("command line round trip") {
    const fs::path dir = scratch("cli");
    const std::string d = dir.string();
    const std::string small = " --set train_d_count=5 --set train_alpha_count=5 --set test_per_class=10";
    CHECK(run("dataset --kind train" + small + " --out " + d + "/train.json 2>/dev/null") == 0);
    CHECK(run("dataset --kind test" + small + " --seed 4 --out " + d + "/test.csv 2>/dev/null") == 0);
    CHECK(run("dataset --kind test" + small + " --seed 4 --out " + d + "/test.json 2>/dev/null") == 0);
    CHECK(run("train --detector knn --data " + d + "/train.json --out " + d + "/knn.json") == 0);
    CHECK(run("train --detector bpnn --set bpnn_max_epochs=20 --data " + d + "/train.json --out " + d +
              "/bpnn.json 2>/dev/null") == 0);
    CHECK(run("eval --model " + d + "/knn.json --data " + d + "/test.json --out " + d + "/eval > /dev/null") == 0);
    CHECK(run("eval --model " + d + "/bpnn.json --data " + d + "/test.json > /dev/null") == 0);
    CHECK(fs::exists(dir / "eval" / "report.json"));
    CHECK(run("gradient --modes 2 > " + d + "/g.csv") == 0);
    CHECK(parse_csv(read_file(d + "/g.csv"))[1][0] == "2");

    CHECK(run("experiment --set no_such_key=1 2> " + d + "/err.txt") != 0);
    CHECK(read_file(d + "/err.txt").find("[config]") != std::string::npos);
    CHECK(run("eval --model " + d + "/missing.json --data " + d + "/test.json 2> " + d + "/err2.txt") != 0);
    CHECK(read_file(d + "/err2.txt").find("[read]") != std::string::npos);
}
