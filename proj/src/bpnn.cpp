#include "oam/bpnn.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "json_util.hpp"
#include "oam/errors.hpp"

namespace oam {

double tanh_act(double x) {
    if (x > 20.0) return 1.0;
    if (x < -20.0) return -1.0;
    // e^{-2|x|} form keeps both exponentials bounded
    const double e = std::exp(-2.0 * std::abs(x));
    const double t = (1.0 - e) / (1.0 + e);
    return x < 0.0 ? -t : t;
}

Eigen::VectorXd BpnnModel::parameters() const {
    Eigen::VectorXd p(static_cast<Eigen::Index>(parameter_count()));
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < w1.rows(); ++r)
        for (Eigen::Index c = 0; c < w1.cols(); ++c) p[k++] = w1(r, c);
    for (Eigen::Index r = 0; r < b1.size(); ++r) p[k++] = b1[r];
    for (Eigen::Index r = 0; r < w2.size(); ++r) p[k++] = w2[r];
    p[k] = b2;
    return p;
}

void BpnnModel::set_parameters(const Eigen::VectorXd& p) {
    if (static_cast<std::size_t>(p.size()) != parameter_count()) throw DomainError("parameter vector size mismatch");
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < w1.rows(); ++r)
        for (Eigen::Index c = 0; c < w1.cols(); ++c) w1(r, c) = p[k++];
    for (Eigen::Index r = 0; r < b1.size(); ++r) b1[r] = p[k++];
    for (Eigen::Index r = 0; r < w2.size(); ++r) w2[r] = p[k++];
    b2 = p[k];
}

double BpnnModel::forward_normalized(std::span<const double> x) const {
    if (x.size() != input_dim())
        throw DomainError("input has " + std::to_string(x.size()) + " features, network expects " +
                          std::to_string(input_dim()));
    const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
    const Eigen::VectorXd z = w1 * xv + b1;
    double out = b2;
    for (Eigen::Index j = 0; j < z.size(); ++j) out += w2[j] * tanh_act(z[j]);
    return out;
}

BpnnModel BpnnModel::initialize(std::size_t input_dim, std::size_t hidden, const NormParams& norm,
                                std::uint64_t seed) {
    if (hidden < 1) throw DomainError("hidden layer needs at least one neuron");
    if (input_dim < 1) throw DomainError("network needs at least one input");
    std::mt19937_64 rng(seed);
    const double s1 = 1.0 / std::sqrt(static_cast<double>(input_dim));
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> u1(-s1, s1), u2(-s2, s2);
    BpnnModel m;
    const auto h = static_cast<Eigen::Index>(hidden), in = static_cast<Eigen::Index>(input_dim);
    m.w1.resize(h, in);
    m.b1.resize(h);
    m.w2.resize(h);
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < in; ++c) m.w1(r, c) = u1(rng);
    for (Eigen::Index r = 0; r < h; ++r) m.b1[r] = u1(rng);
    for (Eigen::Index r = 0; r < h; ++r) m.w2[r] = u2(rng);
    m.b2 = u2(rng);
    m.norm = norm;
    return m;
}

double bpnn_forward(const BpnnModel& model, std::span<const double> features) {
    const std::vector<double> x = model.norm.apply(features);
    return model.norm.invert_label(model.forward_normalized(x));
}

int bpnn_predict_class(const BpnnModel& model, std::span<const double> features, const LabelScheme& scheme) {
    return scheme.nearest_class(bpnn_forward(model, features));
}

Batch make_batch(const SampleSet& set, const NormParams& norm) {
    Batch b;
    const auto n = static_cast<Eigen::Index>(set.samples.size());
    const auto dim = static_cast<Eigen::Index>(norm.feature_min.size());
    b.inputs.resize(n, dim);
    b.targets.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& s = set.samples[static_cast<std::size_t>(i)];
        const std::vector<double> x = norm.apply(s.features);
        for (Eigen::Index c = 0; c < dim; ++c) b.inputs(i, c) = x[static_cast<std::size_t>(c)];
        b.targets[i] = norm.apply_label(s.label);
    }
    return b;
}

namespace {

struct Activations {
    Eigen::MatrixXd hidden;  // samples x hidden, tanh outputs
    Eigen::VectorXd output;
};

Activations activate(const BpnnModel& m, const Eigen::MatrixXd& x) {
    Activations a;
    a.hidden = (x * m.w1.transpose()).rowwise() + m.b1.transpose();
    a.hidden = a.hidden.unaryExpr([](double v) { return tanh_act(v); });
    a.output = (a.hidden * m.w2.transpose()).array() + m.b2;
    return a;
}

}  // namespace

GradientResult bpnn_gradient(const BpnnModel& model, const Batch& batch) {
    const Eigen::Index n = batch.inputs.rows();
    if (n == 0) throw DomainError("gradient of an empty batch");
    if (batch.inputs.cols() != static_cast<Eigen::Index>(model.input_dim()))
        throw DomainError("batch feature dimension mismatch");
    const Eigen::Index in = batch.inputs.cols();
    const Eigen::Index h = static_cast<Eigen::Index>(model.hidden_count());

    const Activations a = activate(model, batch.inputs);
    GradientResult g;
    g.residuals = a.output - batch.targets;

    // d out / d z_j = w2_j (1 - h_j^2)
    const Eigen::MatrixXd dz = (1.0 - a.hidden.array().square()).matrix() * model.w2.asDiagonal();

    g.jacobian.resize(n, static_cast<Eigen::Index>(model.parameter_count()));
    for (Eigen::Index j = 0; j < h; ++j)
        g.jacobian.middleCols(j * in, in) = batch.inputs.array().colwise() * dz.col(j).array();
    g.jacobian.middleCols(h * in, h) = dz;
    g.jacobian.middleCols(h * in + h, h) = a.hidden;
    g.jacobian.col(h * in + 2 * h).setOnes();

    // backpropagated gradient of SSE, computed without the Jacobian
    const Eigen::VectorXd delta_out = 2.0 * g.residuals;
    const Eigen::MatrixXd delta_hidden = dz.array().colwise() * delta_out.array();
    const Eigen::MatrixXd gw1 = delta_hidden.transpose() * batch.inputs;
    g.gradient.resize(g.jacobian.cols());
    Eigen::Index k = 0;
    for (Eigen::Index r = 0; r < h; ++r)
        for (Eigen::Index c = 0; c < in; ++c) g.gradient[k++] = gw1(r, c);
    g.gradient.segment(k, h) = delta_hidden.colwise().sum().transpose();
    k += h;
    g.gradient.segment(k, h) = a.hidden.transpose() * delta_out;
    k += h;
    g.gradient[k] = delta_out.sum();
    return g;
}

void TrainConfig::validate() const {
    if (max_epochs < 1) throw DomainError("max_epochs must be positive");
    if (!(mse_goal >= 0.0)) throw DomainError("mse_goal must be nonnegative");
    if (!(mu_init > 0.0) || !(mu_inc > 1.0) || !(mu_dec > 0.0 && mu_dec < 1.0) || !(mu_max > mu_init))
        throw DomainError("invalid Levenberg-Marquardt damping settings");
    if (!(mu_d_init > 0.0) || !(mu_w_init >= 0.0)) throw DomainError("invalid regularization weights");
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::mse_goal: return "mse_goal";
        case StopReason::max_epochs: return "max_epochs";
        case StopReason::mu_max: return "mu_max";
    }
    return "unknown";
}

std::string TrainReport::to_csv() const {
    std::ostringstream os;
    os.precision(17);
    os << "epoch,mse,mu,gamma_eff,mu_d,mu_w,objective_before,objective_after\n";
    for (const auto& e : epochs)
        os << e.epoch << ',' << e.mse << ',' << e.mu << ',' << e.gamma_eff << ',' << e.mu_d << ',' << e.mu_w << ','
           << e.objective_before << ',' << e.objective_after << '\n';
    return os.str();
}

TrainResult bpnn_train(const SampleSet& train, std::size_t hidden_count, const TrainConfig& cfg) {
    cfg.validate();
    if (train.samples.empty()) throw TrainingError("empty training set");
    const NormParams norm = train.norm ? *train.norm : fit_normalizer(train);
    const Batch batch = make_batch(train, norm);
    const auto n = static_cast<double>(batch.inputs.rows());

    TrainResult result{BpnnModel::initialize(train.feature_dim(), hidden_count, norm, cfg.seed), {}};
    BpnnModel& model = result.model;
    TrainReport& report = result.report;
    const auto nw = static_cast<Eigen::Index>(model.parameter_count());
    const double label_scale = 0.5 * (norm.label_max - norm.label_min);
    auto to_mse = [&](double sse) { return sse / n * label_scale * label_scale; };

    Eigen::VectorXd w = model.parameters();
    GradientResult g = bpnn_gradient(model, batch);
    double sse = g.residuals.squaredNorm();
    double mu_d = cfg.mu_d_init;
    double mu_w = cfg.mu_w_init;
    double mu = cfg.mu_init;
    double gamma = static_cast<double>(nw);
    double objective = mu_d * sse + mu_w * w.squaredNorm();
    report.initial_mse = to_mse(sse);

    Eigen::MatrixXd jtj(nw, nw);
    auto gauss_newton = [&] {
        jtj.setZero();
        jtj.selfadjointView<Eigen::Lower>().rankUpdate(g.jacobian.transpose());
        jtj.triangularView<Eigen::StrictlyUpper>() = jtj.transpose();
    };
    gauss_newton();

    report.stop = StopReason::max_epochs;
    int epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        if (to_mse(sse) <= cfg.mse_goal) {
            report.stop = StopReason::mse_goal;
            break;
        }
        const Eigen::VectorXd rhs = -(mu_d * (g.jacobian.transpose() * g.residuals) + mu_w * w);
        bool accepted = false;
        bool any_finite = false;
        Eigen::VectorXd w_new;
        double sse_new = 0.0, objective_new = 0.0;
        while (mu <= cfg.mu_max) {
            Eigen::MatrixXd a = mu_d * jtj;
            a.diagonal().array() += mu_w + mu;
            const Eigen::VectorXd step = a.ldlt().solve(rhs);
            if (step.allFinite()) {
                any_finite = true;
                w_new = w + step;
                model.set_parameters(w_new);
                sse_new = (activate(model, batch.inputs).output - batch.targets).squaredNorm();
                objective_new = mu_d * sse_new + mu_w * w_new.squaredNorm();
                if (std::isfinite(objective_new) && objective_new < objective) {
                    accepted = true;
                    mu *= cfg.mu_dec;
                    break;
                }
            }
            mu *= cfg.mu_inc;
        }
        if (!accepted) {
            model.set_parameters(w);
            if (!any_finite) {
                std::ostringstream os;
                os << "Levenberg-Marquardt system singular up to mu_max at epoch " << epoch + 1
                   << " (mu_D=" << mu_d << ", mu_W=" << mu_w << ", mse=" << to_mse(sse) << ")";
                throw TrainingError(os.str());
            }
            report.stop = StopReason::mu_max;
            break;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.objective_before = objective;
        rec.objective_after = objective_new;
        rec.mu = mu;

        w = w_new;
        g = bpnn_gradient(model, batch);
        sse = g.residuals.squaredNorm();
        gauss_newton();
        const double ssw = w.squaredNorm();
        if (cfg.bayesian) {
            if (mu_w > 0.0) {
                Eigen::MatrixXd b = mu_d * jtj;
                b.diagonal().array() += mu_w;
                const Eigen::MatrixXd inv = b.ldlt().solve(Eigen::MatrixXd::Identity(nw, nw));
                if (inv.allFinite()) gamma = static_cast<double>(nw) - mu_w * inv.trace();
            } else {
                gamma = static_cast<double>(nw);
            }
            gamma = std::clamp(gamma, 0.0, static_cast<double>(nw));
            mu_w = ssw > 0.0 ? gamma / (2.0 * ssw) : 1.0;
            const double dof = std::max(n - gamma, 1.0);
            mu_d = dof / (2.0 * std::max(sse, std::numeric_limits<double>::min()));
        }
        objective = mu_d * sse + mu_w * ssw;

        rec.mse = to_mse(sse);
        rec.gamma_eff = gamma;
        rec.mu_d = mu_d;
        rec.mu_w = mu_w;
        report.epochs.push_back(rec);
    }
    report.epoch_count = epoch;
    report.final_mse = to_mse(sse);
    report.gamma_eff = gamma;
    model.set_parameters(w);
    return result;
}

std::string to_json(const BpnnModel& model, const LabelScheme& scheme, const TrainConfig& cfg) {
    using detail::json;
    json w1 = json::array();
    for (Eigen::Index r = 0; r < model.w1.rows(); ++r) {
        std::vector<double> row(static_cast<std::size_t>(model.w1.cols()));
        for (Eigen::Index c = 0; c < model.w1.cols(); ++c) row[static_cast<std::size_t>(c)] = model.w1(r, c);
        w1.push_back(row);
    }
    json j;
    j["type"] = "bpnn";
    j["hidden_count"] = model.hidden_count();
    j["input_dim"] = model.input_dim();
    j["w1"] = w1;
    j["b1"] = std::vector<double>(model.b1.data(), model.b1.data() + model.b1.size());
    j["w2"] = std::vector<double>(model.w2.data(), model.w2.data() + model.w2.size());
    j["b2"] = model.b2;
    j["norm_params"] = detail::norm_to_json(model.norm);
    j["scheme"] = detail::scheme_to_json(scheme);
    j["config"] = {{"max_epochs", cfg.max_epochs}, {"mse_goal", cfg.mse_goal}, {"mu_init", cfg.mu_init},
                   {"mu_inc", cfg.mu_inc},         {"mu_dec", cfg.mu_dec},     {"mu_max", cfg.mu_max},
                   {"bayesian", cfg.bayesian},     {"mu_d_init", cfg.mu_d_init}, {"mu_w_init", cfg.mu_w_init},
                   {"seed", cfg.seed}};
    return j.dump(1) + "\n";
}

LoadedBpnn bpnn_from_json(const std::string& text) {
    const auto j = detail::parse_json(text);
    try {
        if (j.at("type").get<std::string>() != "bpnn") throw ParseError("not a BPNN model", 0);
        const auto hidden = j.at("hidden_count").get<Eigen::Index>();
        const auto in = j.at("input_dim").get<Eigen::Index>();
        BpnnModel m;
        m.w1.resize(hidden, in);
        const auto rows = j.at("w1").get<std::vector<std::vector<double>>>();
        if (static_cast<Eigen::Index>(rows.size()) != hidden) throw ParseError("w1 row count mismatch", 0);
        for (Eigen::Index r = 0; r < hidden; ++r) {
            if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != in)
                throw ParseError("w1 column count mismatch", 0);
            for (Eigen::Index c = 0; c < in; ++c)
                m.w1(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        }
        const auto b1 = j.at("b1").get<std::vector<double>>();
        const auto w2 = j.at("w2").get<std::vector<double>>();
        if (static_cast<Eigen::Index>(b1.size()) != hidden || static_cast<Eigen::Index>(w2.size()) != hidden)
            throw ParseError("hidden layer size mismatch", 0);
        m.b1 = Eigen::Map<const Eigen::VectorXd>(b1.data(), hidden);
        m.w2 = Eigen::Map<const Eigen::RowVectorXd>(w2.data(), hidden);
        m.b2 = j.at("b2").get<double>();
        m.norm = detail::norm_from_json(j.at("norm_params"));
        TrainConfig cfg;
        const auto& jc = j.at("config");
        cfg.max_epochs = jc.at("max_epochs").get<int>();
        cfg.mse_goal = jc.at("mse_goal").get<double>();
        cfg.mu_init = jc.at("mu_init").get<double>();
        cfg.mu_inc = jc.at("mu_inc").get<double>();
        cfg.mu_dec = jc.at("mu_dec").get<double>();
        cfg.mu_max = jc.at("mu_max").get<double>();
        cfg.bayesian = jc.at("bayesian").get<bool>();
        cfg.mu_d_init = jc.at("mu_d_init").get<double>();
        cfg.mu_w_init = jc.at("mu_w_init").get<double>();
        cfg.seed = jc.at("seed").get<std::uint64_t>();
        return {std::move(m), detail::scheme_from_json(j.at("scheme")), cfg};
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("invalid BPNN model: ") + e.what(), 0);
    }
}

}  // namespace oam
