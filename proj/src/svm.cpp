#include "oam/svm.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <list>
#include <numeric>
#include <random>
#include <thread>
#include <unordered_map>

#include "json_util.hpp"
#include "oam/errors.hpp"

namespace oam {

std::string to_string(KernelType k) { return k == KernelType::rbf ? "rbf" : "linear"; }

KernelType parse_kernel(const std::string& s) {
    if (s == "rbf") return KernelType::rbf;
    if (s == "linear") return KernelType::linear;
    throw DomainError("unknown kernel '" + s + "'");
}

void SvmConfig::validate() const {
    if (!(c > 0.0)) throw DomainError("SVM box constraint c must be positive");
    if (!(tol > 0.0)) throw DomainError("SVM tolerance must be positive");
    if (max_iterations < 1) throw DomainError("SVM iteration cap must be positive");
}

double Kernel::operator()(std::span<const double> a, std::span<const double> b) const {
    if (type == KernelType::linear) return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return std::exp(-gamma * s);
}

double SvmBinary::decision(const Kernel& k, std::span<const double> x) const {
    double f = bias;
    const auto dim = static_cast<std::size_t>(support_vectors.cols());
    for (Eigen::Index i = 0; i < support_vectors.rows(); ++i)
        f += dual_coef[i] * k(std::span<const double>(support_vectors.row(i).data(), dim), x);
    return f;
}

namespace {

/// LRU cache of kernel matrix rows.
class KernelRows {
public:
    KernelRows(const Eigen::MatrixXd& x, const Kernel& k, std::size_t cache_mb)
        : xt_(x.transpose()), kernel_(k), n_(static_cast<std::size_t>(x.rows())) {
        const std::size_t row_bytes = std::max<std::size_t>(1, n_ * sizeof(double));
        capacity_ = std::max<std::size_t>(2, cache_mb * 1024 * 1024 / row_bytes);
    }

    const std::vector<double>& row(std::size_t i) {
        if (auto it = index_.find(i); it != index_.end()) {
            lru_.splice(lru_.begin(), lru_, it->second);
            return it->second->second;
        }
        if (lru_.size() >= capacity_) {
            index_.erase(lru_.back().first);
            lru_.pop_back();
        }
        std::vector<double> r(n_);
        const auto xi = sample(i);
        for (std::size_t j = 0; j < n_; ++j) r[j] = kernel_(xi, sample(j));
        lru_.emplace_front(i, std::move(r));
        index_[i] = lru_.begin();
        return lru_.front().second;
    }

    std::span<const double> sample(std::size_t i) const {
        return {xt_.data() + i * static_cast<std::size_t>(xt_.rows()), static_cast<std::size_t>(xt_.rows())};
    }

private:
    Eigen::MatrixXd xt_;  // column i is sample i
    Kernel kernel_;
    std::size_t n_;
    std::size_t capacity_;
    std::list<std::pair<std::size_t, std::vector<double>>> lru_;
    std::unordered_map<std::size_t, decltype(lru_)::iterator> index_;
};

}  // namespace

SvmBinary solve_binary(const Eigen::MatrixXd& x, const std::vector<int>& y, const Kernel& kernel,
                       const SvmConfig& cfg, std::vector<double>* alphas_out) {
    cfg.validate();
    const std::size_t n = static_cast<std::size_t>(x.rows());
    if (y.size() != n) throw DomainError("label count differs from sample count");
    if (std::none_of(y.begin(), y.end(), [](int v) { return v > 0; }) ||
        std::none_of(y.begin(), y.end(), [](int v) { return v < 0; }))
        throw DegenerateError("binary SVM problem needs samples of both signs");

    const double c = cfg.c;
    KernelRows rows(x, kernel, cfg.cache_mb);
    std::vector<double> diag(n);
    for (std::size_t i = 0; i < n; ++i) diag[i] = kernel(rows.sample(i), rows.sample(i));

    std::vector<double> alpha(n, 0.0);
    std::vector<double> grad(n, -1.0);  // G = Q a - 1
    auto in_up = [&](std::size_t t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0.0); };
    auto in_low = [&](std::size_t t) { return (y[t] > 0 && alpha[t] > 0.0) || (y[t] < 0 && alpha[t] < c); };

    SvmBinary out;
    constexpr double tau = 1e-12;
    long iter = 0;
    for (; iter < cfg.max_iterations; ++iter) {
        double gmax = -std::numeric_limits<double>::infinity();
        double gmin = std::numeric_limits<double>::infinity();
        std::size_t i = n, j = n;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = -y[t] * grad[t];
            if (in_up(t) && v > gmax) {
                gmax = v;
                i = t;
            }
            if (in_low(t) && v < gmin) {
                gmin = v;
                j = t;
            }
        }
        if (i == n || j == n || gmax - gmin < cfg.tol) {
            out.converged = true;
            break;
        }

        const std::vector<double>& ki = rows.row(i);
        const std::vector<double>& kj = rows.row(j);
        const double kij = ki[j];
        const double ai_old = alpha[i];
        const double aj_old = alpha[j];
        double quad = diag[i] + diag[j] - 2.0 * kij;
        if (quad <= 0.0) quad = tau;

        if (y[i] != y[j]) {
            const double delta = (-grad[i] - grad[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if (diff > 0.0) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if (alpha[j] > c) {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            const double delta = (grad[i] - grad[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > c) {
                if (alpha[i] > c) {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if (alpha[j] < 0.0) {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if (sum > c) {
                if (alpha[j] > c) {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if (alpha[i] < 0.0) {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        // Q_ti = y_t y_i K_ti
        const double di = (alpha[i] - ai_old) * y[i];
        const double dj = (alpha[j] - aj_old) * y[j];
        for (std::size_t t = 0; t < n; ++t) grad[t] += y[t] * (ki[t] * di + kj[t] * dj);
    }
    out.iterations = iter;

    // rho: mean of y G over free vectors, else the middle of the feasible interval
    double ub = std::numeric_limits<double>::infinity();
    double lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (alpha[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            free_sum += yg;
            ++n_free;
        }
    }
    const double rho = n_free > 0 ? free_sum / static_cast<double>(n_free) : 0.5 * (ub + lb);
    out.bias = -rho;

    double obj = 0.0;
    for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (grad[t] - 1.0);
    out.dual_objective = 0.5 * obj;

    std::vector<std::size_t> sv;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0.0) sv.push_back(t);
    out.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    out.dual_coef.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t s = 0; s < sv.size(); ++s) {
        out.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(static_cast<Eigen::Index>(sv[s]));
        out.dual_coef[static_cast<Eigen::Index>(s)] = alpha[sv[s]] * y[sv[s]];
    }
    if (alphas_out) *alphas_out = std::move(alpha);
    return out;
}

// ---------------------------------------------------------------------------

SvmModel svm_train(const SampleSet& train, const SvmConfig& cfg) {
    cfg.validate();
    if (train.samples.empty()) throw DegenerateError("empty SVM training set");
    const std::size_t dim = train.feature_dim();

    std::vector<int> classes;
    for (const auto& s : train.samples) classes.push_back(s.class_index);
    std::sort(classes.begin(), classes.end());
    classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
    if (classes.size() < 2) throw DegenerateError("SVM training needs at least two classes");

    SvmModel model;
    model.cfg_ = cfg;
    model.classes_ = classes;
    model.dim_ = dim;
    model.scheme_ = train.scheme;
    model.embedding_ = train.embedding;
    model.kernel_.type = cfg.kernel;
    model.kernel_.gamma = cfg.gamma;
    if (cfg.kernel == KernelType::rbf && !(cfg.gamma > 0.0)) {
        double sum = 0.0, sq = 0.0;
        std::size_t cnt = 0;
        for (const auto& s : train.samples)
            for (double f : s.features) {
                sum += f;
                sq += f * f;
                ++cnt;
            }
        const double mean = sum / static_cast<double>(cnt);
        const double var = sq / static_cast<double>(cnt) - mean * mean;
        if (!(var > 0.0)) throw DegenerateError("features have zero variance");
        model.kernel_.gamma = 1.0 / (static_cast<double>(dim) * var);
    }

    std::vector<std::pair<int, int>> pairs;
    for (std::size_t a = 0; a < classes.size(); ++a)
        for (std::size_t b = a + 1; b < classes.size(); ++b) pairs.emplace_back(classes[a], classes[b]);
    model.binaries_.resize(pairs.size());

    auto solve_pair = [&](std::size_t p) {
        const auto [pos, neg] = pairs[p];
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < train.samples.size(); ++i) {
            const int ci = train.samples[i].class_index;
            if (ci == pos || ci == neg) idx.push_back(i);
        }
        if (cfg.shuffle) {
            std::mt19937_64 rng(cfg.seed + p);
            std::shuffle(idx.begin(), idx.end(), rng);
        }
        Eigen::MatrixXd x(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(dim));
        std::vector<int> y(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
            const auto& s = train.samples[idx[r]];
            if (s.features.size() != dim) throw DomainError("inconsistent feature dimension");
            for (std::size_t f = 0; f < dim; ++f)
                x(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(f)) = s.features[f];
            y[r] = s.class_index == pos ? 1 : -1;
        }
        SvmBinary b = solve_binary(x, y, model.kernel_, cfg);
        b.positive_class = pos;
        b.negative_class = neg;
        model.binaries_[p] = std::move(b);
    };

    const std::size_t workers =
        std::min<std::size_t>(pairs.size(), std::max(1u, std::thread::hardware_concurrency()));
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
        pool.emplace_back([&, w] {
            try {
                for (std::size_t p = next++; p < pairs.size(); p = next++) solve_pair(p);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return model;
}

int SvmModel::classify(std::span<const double> query) const {
    if (query.size() != dim_)
        throw DomainError("query has " + std::to_string(query.size()) + " features, model expects " +
                          std::to_string(dim_));
    std::unordered_map<int, std::pair<int, double>> tally;  // class -> (votes, |decision| sum)
    for (const auto& b : binaries_) {
        const double f = b.decision(kernel_, query);
        const int winner = f > 0.0 ? b.positive_class : b.negative_class;
        auto& t = tally[winner];
        ++t.first;
        t.second += std::abs(f);
    }
    int best = classes_.front();
    std::pair<int, double> best_t{-1, -1.0};
    for (int cls : classes_) {  // ascending, so equal tallies keep the lower index
        const auto it = tally.find(cls);
        const std::pair<int, double> t = it == tally.end() ? std::pair<int, double>{0, 0.0} : it->second;
        if (t.first > best_t.first || (t.first == best_t.first && t.second > best_t.second)) {
            best = cls;
            best_t = t;
        }
    }
    return best;
}

std::string SvmModel::to_json() const {
    using detail::json;
    json j;
    j["type"] = "svm";
    j["kernel"] = {{"type", to_string(kernel_.type)}, {"gamma", kernel_.gamma}};
    j["config"] = {{"c", cfg_.c}, {"tol", cfg_.tol}, {"max_iterations", cfg_.max_iterations}};
    j["feature_dim"] = dim_;
    j["classes"] = classes_;
    j["scheme"] = detail::scheme_to_json(scheme_);
    j["embedding"] = oam::to_string(embedding_);
    json bins = json::array();
    for (const auto& b : binaries_) {
        json svs = json::array();
        for (Eigen::Index r = 0; r < b.support_vectors.rows(); ++r) {
            const double* row = b.support_vectors.row(r).data();
            svs.push_back(std::vector<double>(row, row + b.support_vectors.cols()));
        }
        bins.push_back({{"positive_class", b.positive_class},
                        {"negative_class", b.negative_class},
                        {"bias", b.bias},
                        {"iterations", b.iterations},
                        {"converged", b.converged},
                        {"dual_objective", b.dual_objective},
                        {"dual_coef", std::vector<double>(b.dual_coef.data(), b.dual_coef.data() + b.dual_coef.size())},
                        {"support_vectors", svs}});
    }
    j["binaries"] = bins;
    return j.dump() + "\n";
}

SvmModel SvmModel::from_json(const std::string& text) {
    const auto j = detail::parse_json(text);
    try {
        if (j.at("type").get<std::string>() != "svm") throw ParseError("not an SVM model", 0);
        SvmModel m;
        m.kernel_.type = parse_kernel(j.at("kernel").at("type").get<std::string>());
        m.kernel_.gamma = j.at("kernel").at("gamma").get<double>();
        m.cfg_.kernel = m.kernel_.type;
        m.cfg_.gamma = m.kernel_.gamma;
        m.cfg_.c = j.at("config").at("c").get<double>();
        m.cfg_.tol = j.at("config").at("tol").get<double>();
        m.cfg_.max_iterations = j.at("config").at("max_iterations").get<long>();
        m.dim_ = j.at("feature_dim").get<std::size_t>();
        m.classes_ = j.at("classes").get<std::vector<int>>();
        m.scheme_ = detail::scheme_from_json(j.at("scheme"));
        m.embedding_ = parse_embedding(j.value("embedding", std::string("phase")));
        for (const auto& jb : j.at("binaries")) {
            SvmBinary b;
            b.positive_class = jb.at("positive_class").get<int>();
            b.negative_class = jb.at("negative_class").get<int>();
            b.bias = jb.at("bias").get<double>();
            b.iterations = jb.at("iterations").get<long>();
            b.converged = jb.at("converged").get<bool>();
            b.dual_objective = jb.at("dual_objective").get<double>();
            const auto coef = jb.at("dual_coef").get<std::vector<double>>();
            const auto svs = jb.at("support_vectors").get<std::vector<std::vector<double>>>();
            if (coef.size() != svs.size()) throw ParseError("support vector count mismatch", 0);
            b.dual_coef = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
            b.support_vectors.resize(static_cast<Eigen::Index>(svs.size()), static_cast<Eigen::Index>(m.dim_));
            for (std::size_t r = 0; r < svs.size(); ++r) {
                if (svs[r].size() != m.dim_) throw ParseError("support vector dimension mismatch", 0);
                for (std::size_t c = 0; c < m.dim_; ++c)
                    b.support_vectors(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = svs[r][c];
            }
            m.binaries_.push_back(std::move(b));
        }
        return m;
    } catch (const detail::json::exception& e) {
        throw ParseError(std::string("invalid SVM model: ") + e.what(), 0);
    }
}

}  // namespace oam
