#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>

#include "oam/errors.hpp"
#include "oam/experiment.hpp"
#include "oam/gradient_detector.hpp"

namespace {

struct Common {
    std::string config_path;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed;
    std::string scenario;
};

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("-c,--config", c.config_path, "key = value configuration file");
    cmd->add_option("-s,--set", c.overrides, "override one setting, key=value (repeatable)");
    cmd->add_option("--seed", c.seed, "random seed");
    cmd->add_option("--scenario", c.scenario, "single-mode or multi-mode");
}

oam::ExperimentConfig load_config(const Common& c) {
    oam::ExperimentConfig cfg;
    try {
        if (!c.scenario.empty()) cfg.set("scenario", c.scenario);
        if (!c.config_path.empty()) cfg.load_file(c.config_path);
        for (const auto& kv : c.overrides) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw oam::DomainError("--set expects key=value, got '" + kv + "'");
            cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
        }
        if (c.seed) cfg.seed = *c.seed;
        cfg.validate();
    } catch (const oam::StageError&) {
        throw;
    } catch (const std::exception& e) {
        throw oam::StageError("config", e.what());
    }
    return cfg;
}

void write_out(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    const auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    oam::write_file_atomic(path, text);
}

std::vector<int> parse_modes(const std::string& text) {
    oam::ExperimentConfig scratch;
    scratch.set("classes", text);
    if (scratch.classes.size() != 1) throw oam::DomainError("expected one comma-separated mode list");
    return scratch.classes.front();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"OAM mode detection under oblique UCA misalignment"};
    app.require_subcommand(1);

    Common common;

    // dataset
    auto* ds = app.add_subcommand("dataset", "generate the training grid or a random test set");
    std::string ds_kind = "train", ds_out;
    add_common(ds, common);
    ds->add_option("--kind", ds_kind, "train or test")->check(CLI::IsMember({"train", "test"}));
    ds->add_option("-o,--out", ds_out, "output file (.csv or .json)")->required();

    // train
    auto* tr = app.add_subcommand("train", "train one detector on a saved training set");
    std::string tr_detector, tr_data, tr_out;
    add_common(tr, common);
    tr->add_option("--detector", tr_detector, "knn, svm or bpnn")->required()->check(
        CLI::IsMember({"knn", "svm", "bpnn"}));
    tr->add_option("--data", tr_data, "training set (.json)")->required();
    tr->add_option("-o,--out", tr_out, "model file (.json)")->required();

    // eval
    auto* ev = app.add_subcommand("eval", "evaluate a saved model on a saved test set");
    std::string ev_model, ev_data, ev_out;
    ev->add_option("--model", ev_model, "model file")->required();
    ev->add_option("--data", ev_data, "test set (.json)")->required();
    ev->add_option("-o,--out", ev_out, "directory for the report files");

    // experiment
    auto* ex = app.add_subcommand("experiment", "train all detectors and evaluate on the test region");
    std::string ex_out;
    add_common(ex, common);
    ex->add_option("-o,--out", ex_out, "output directory");

    // sweep
    auto* sw = app.add_subcommand("sweep", "accuracy as one test parameter varies");
    oam::SweepSpec sw_spec;
    std::string sw_axis = "alpha", sw_out;
    add_common(sw, common);
    sw->add_option("--axis", sw_axis, "alpha, distance or snr");
    sw->add_option("--from", sw_spec.from)->required();
    sw->add_option("--to", sw_spec.to)->required();
    sw->add_option("--steps", sw_spec.steps)->required();
    sw->add_option("--per-class", sw_spec.per_class);
    sw->add_option("-o,--out", sw_out, "CSV file (stdout if omitted)");

    // phasefield
    auto* pf = app.add_subcommand("phasefield", "sample the received field over the receive plane");
    oam::PhaseFieldSpec pf_spec;
    std::vector<std::string> pf_modes;
    std::string pf_out;
    add_common(pf, common);
    pf->add_option("--modes", pf_modes, "mode list such as 1,2 (repeatable)");
    pf->add_option("--alpha", pf_spec.alphas_deg, "tilt angles in degrees");
    pf->add_option("--distance", pf_spec.distance);
    pf->add_option("--extent", pf_spec.extent);
    pf->add_option("--points", pf_spec.points);
    pf->add_option("-o,--out", pf_out, "output directory")->required();

    // gradient
    auto* gd = app.add_subcommand("gradient", "phase-gradient estimate for one link");
    std::string gd_modes = "1";
    double gd_distance = 300.0, gd_alpha = 0.0;
    add_common(gd, common);
    gd->add_option("--modes", gd_modes, "transmitted modes, comma separated");
    gd->add_option("--distance", gd_distance);
    gd->add_option("--alpha", gd_alpha, "tilt in degrees");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ds) {
            const auto cfg = load_config(common);
            oam::SampleSet set;
            try {
                set = ds_kind == "train" ? oam::build_training_set(cfg) : oam::build_test_set(cfg, cfg.seed);
            } catch (const std::exception& e) {
                throw oam::StageError("dataset", e.what());
            }
            try {
                oam::save_sample_set(ds_out, set);
            } catch (const std::exception& e) {
                throw oam::StageError("write", e.what());
            }
            std::cerr << set.samples.size() << " samples written to " << ds_out << '\n';
        } else if (*tr) {
            const auto cfg = load_config(common);
            oam::SampleSet train;
            try {
                train = oam::load_sample_set(tr_data);
            } catch (const std::exception& e) {
                throw oam::StageError("read", e.what());
            }
            std::string model;
            try {
                if (tr_detector == "knn") {
                    model = oam::knn_fit(train, cfg.knn_k, cfg.knn_metric).to_json();
                } else if (tr_detector == "svm") {
                    auto sc = cfg.svm;
                    sc.seed = cfg.seed;
                    model = oam::svm_train(train, sc).to_json();
                } else {
                    auto bc = cfg.bpnn;
                    bc.seed = cfg.seed;
                    const auto r = oam::bpnn_train(train, cfg.bpnn_hidden, bc);
                    model = oam::to_json(r.model, train.scheme, bc);
                    std::cerr << "final training MSE " << r.report.final_mse << " after " << r.report.epoch_count
                              << " epochs (" << oam::to_string(r.report.stop) << ")\n";
                }
            } catch (const std::exception& e) {
                throw oam::StageError("train:" + tr_detector, e.what());
            }
            write_out(tr_out, model);
        } else if (*ev) {
            oam::SampleSet test;
            std::string text;
            try {
                test = oam::load_sample_set(ev_data);
                text = oam::read_file(ev_model);
            } catch (const std::exception& e) {
                throw oam::StageError("read", e.what());
            }
            oam::EvalReport rep;
            try {
                const std::string type = nlohmann::json::parse(text).at("type").get<std::string>();
                if (type == "knn") {
                    const auto m = oam::KnnModel::from_json(text);
                    rep = oam::evaluate({"KNN", [&](std::span<const double> x) { return m.classify(x); }, {},
                                         m.feature_dim()},
                                        test);
                } else if (type == "svm") {
                    const auto m = oam::SvmModel::from_json(text);
                    rep = oam::evaluate({"SVM", [&](std::span<const double> x) { return m.classify(x); }, {},
                                         m.feature_dim()},
                                        test);
                } else if (type == "bpnn") {
                    const auto m = oam::bpnn_from_json(text);
                    rep = oam::evaluate(
                        {"BPNN", [&](std::span<const double> x) { return oam::bpnn_predict_class(m.model, x, test.scheme); },
                         [&](std::span<const double> x) { return oam::bpnn_forward(m.model, x); },
                         m.model.input_dim()},
                        test);
                } else {
                    throw oam::DomainError("unknown model type '" + type + "'");
                }
            } catch (const std::exception& e) {
                throw oam::StageError("evaluate", e.what());
            }
            std::cout << oam::summary_table({rep});
            if (!ev_out.empty()) {
                namespace fs = std::filesystem;
                fs::create_directories(ev_out);
                write_out((fs::path(ev_out) / "report.json").string(), rep.to_json());
                write_out((fs::path(ev_out) / "confusion.csv").string(), rep.confusion_csv(test.scheme));
                write_out((fs::path(ev_out) / "predictions.csv").string(), rep.predictions_csv());
            }
        } else if (*ex) {
            auto cfg = load_config(common);
            if (!ex_out.empty()) cfg.out_dir = ex_out;
            const auto r = oam::run_experiment(cfg);
            std::cout << oam::summary_table(r.reports);
        } else if (*sw) {
            const auto cfg = load_config(common);
            std::string csv;
            try {
                sw_spec.axis = oam::parse_sweep_axis(sw_axis);
                csv = oam::sweep(cfg, sw_spec);
            } catch (const std::exception& e) {
                throw oam::StageError("sweep", e.what());
            }
            write_out(sw_out, csv);
        } else if (*pf) {
            const auto cfg = load_config(common);
            std::map<std::string, std::string> files;
            try {
                if (!pf_modes.empty()) {
                    pf_spec.mode_sets.clear();
                    for (const auto& m : pf_modes) pf_spec.mode_sets.push_back(parse_modes(m));
                }
                files = oam::phase_field(cfg, pf_spec);
            } catch (const std::exception& e) {
                throw oam::StageError("phasefield", e.what());
            }
            for (const auto& [name, text] : files) {
                write_out((std::filesystem::path(pf_out) / name).string(), text);
                std::cerr << "wrote " << name << '\n';
            }
        } else if (*gd) {
            const auto cfg = load_config(common);
            try {
                const auto geom = cfg.geometry().at(gd_distance, oam::deg2rad(gd_alpha));
                const oam::ModeSet ms(parse_modes(gd_modes));
                ms.check_resolvable(geom.tx.n_elements);
                const auto est = oam::gradient_detect(oam::receive_exact(geom, ms, std::nullopt));
                std::cout << "mode_estimate,raw_winding,residual\n"
                          << est.mode_estimate << ',' << est.raw_winding << ',' << est.residual << '\n';
            } catch (const std::exception& e) {
                throw oam::StageError("gradient", e.what());
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
