#include "lfa/probe.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <map>
#include <set>

#include <json.hpp>

#include "lfa/errors.hpp"
#include "lfa/hashing.hpp"

namespace lfa {

using nlohmann::json;

namespace {

// log(1 + exp(-t)) without overflow.
double log1p_exp_neg(double t) {
    if (t > 0.0) return std::log1p(std::exp(-t));
    return -t + std::log1p(std::exp(t));
}

// sigma(-t) = 1 / (1 + exp(t)) without overflow.
double sigmoid_neg(double t) {
    if (t > 0.0) {
        double e = std::exp(-t);
        return e / (1.0 + e);
    }
    return 1.0 / (1.0 + std::exp(t));
}

struct LbfgsResult {
    Eigen::VectorXd theta;
    bool converged = false;
    int iterations = 0;
};

// Limited-memory BFGS with backtracking Armijo line search. Deterministic:
// starts from zero, no randomness anywhere.
template <typename ObjFn, typename GradFn, typename TraceFn>
LbfgsResult lbfgs_minimize(Eigen::Index dim, ObjFn&& objective, GradFn&& gradient, int max_iter,
                           double tol, TraceFn&& trace) {
    constexpr int kMemory = 10;
    constexpr double kArmijoC1 = 1e-4;

    LbfgsResult res;
    res.theta = Eigen::VectorXd::Zero(dim);

    Eigen::VectorXd g = gradient(res.theta);
    double f = objective(res.theta);
    trace(0, f);
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    for (int iter = 0; iter < max_iter; ++iter) {
        if (g.lpNorm<Eigen::Infinity>() <= tol) {
            res.converged = true;
            res.iterations = iter;
            return res;
        }

        // two-loop recursion
        Eigen::VectorXd q = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t i = s_hist.size(); i-- > 0;) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const Eigen::VectorXd& s = s_hist.back();
            const Eigen::VectorXd& y = y_hist.back();
            double gamma = s.dot(y) / y.dot(y);
            q *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd direction = -q;

        double descent = g.dot(direction);
        if (!(descent < 0.0)) {
            direction = -g;
            descent = g.dot(direction);
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
        }

        double step = 1.0;
        Eigen::VectorXd theta_next;
        double f_next = f;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            theta_next = res.theta + step * direction;
            f_next = objective(theta_next);
            if (std::isfinite(f_next) && f_next <= f + kArmijoC1 * step * descent) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            // no progress possible at machine precision
            res.iterations = iter;
            res.converged = g.lpNorm<Eigen::Infinity>() <= tol;
            return res;
        }

        Eigen::VectorXd g_next = gradient(theta_next);
        Eigen::VectorXd s = theta_next - res.theta;
        Eigen::VectorXd y = g_next - g;
        double sy = s.dot(y);
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(y));
            rho_hist.push_back(1.0 / sy);
            if (static_cast<int>(s_hist.size()) > kMemory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        res.theta = std::move(theta_next);
        f = f_next;
        g = std::move(g_next);
        res.iterations = iter + 1;
        trace(iter + 1, f);
    }
    res.converged = g.lpNorm<Eigen::Infinity>() <= tol;
    return res;
}

} // namespace

double binary_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& theta, double reg_c) {
    const Eigen::Index k = Z.cols();
    Eigen::VectorXd w = theta.head(k);
    double b = theta[k];
    double loss = 0.0;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        double margin = y[i] * (Z.row(i).dot(w) + b);
        loss += log1p_exp_neg(margin);
    }
    return 0.5 * w.squaredNorm() + reg_c * loss;
}

Eigen::VectorXd binary_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& theta, double reg_c) {
    const Eigen::Index k = Z.cols();
    Eigen::VectorXd w = theta.head(k);
    double b = theta[k];
    Eigen::VectorXd grad = Eigen::VectorXd::Zero(k + 1);
    grad.head(k) = w;
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        double margin = y[i] * (Z.row(i).dot(w) + b);
        double coeff = -y[i] * sigmoid_neg(margin) * reg_c;
        grad.head(k) += coeff * Z.row(i).transpose();
        grad[k] += coeff;
    }
    return grad;
}

ProbeModel fit_probe_with_classes(const Eigen::MatrixXd& Z, const std::vector<std::string>& labels,
                                  std::vector<std::string> classes, const ProbeOptions& opts) {
    const Eigen::Index n = Z.rows();
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw ValidationError("fit_probe: row/label count mismatch");
    }
    if (!Z.allFinite()) throw ValidationError("fit_probe: non-finite features");
    if (!(opts.reg_c > 0.0)) throw ValidationError("fit_probe: reg_c must be positive");
    if (classes.size() < 2) throw ValidationError("degenerate label set: need at least 2 classes");
    if (static_cast<std::size_t>(n) < classes.size()) {
        throw ValidationError("fit_probe: fewer samples than classes");
    }

    std::set<std::string> label_set(labels.begin(), labels.end());
    for (const auto& c : classes) {
        if (!label_set.count(c)) {
            throw ValidationError("class '" + c + "' is absent from the training labels");
        }
    }
    for (const auto& l : labels) {
        if (std::find(classes.begin(), classes.end(), l) == classes.end()) {
            throw ValidationError("label '" + l + "' is not in the class list");
        }
    }

    ProbeModel model;
    model.classes = std::move(classes);
    model.reg_c = opts.reg_c;
    model.weights.resize(static_cast<Eigen::Index>(model.classes.size()), Z.cols());
    model.biases.resize(static_cast<Eigen::Index>(model.classes.size()));
    model.converged = true;
    model.iterations = 0;

    for (std::size_t c = 0; c < model.classes.size(); ++c) {
        Eigen::VectorXd y(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            y[i] = labels[static_cast<std::size_t>(i)] == model.classes[c] ? 1.0 : -1.0;
        }
        auto objective = [&](const Eigen::VectorXd& theta) {
            return binary_objective(Z, y, theta, opts.reg_c);
        };
        auto gradient = [&](const Eigen::VectorXd& theta) {
            return binary_gradient(Z, y, theta, opts.reg_c);
        };
        auto trace = [&](int iter, double f) {
            if (opts.trace) opts.trace(c, iter, f);
        };
        LbfgsResult res = lbfgs_minimize(Z.cols() + 1, objective, gradient, opts.max_iter,
                                         opts.tol, trace);
        model.weights.row(static_cast<Eigen::Index>(c)) = res.theta.head(Z.cols()).transpose();
        model.biases[static_cast<Eigen::Index>(c)] = res.theta[Z.cols()];
        model.converged = model.converged && res.converged;
        model.iterations = std::max(model.iterations, res.iterations);
    }
    return model;
}

ProbeModel fit_probe(const Eigen::MatrixXd& Z, const std::vector<std::string>& labels,
                     const ProbeOptions& opts) {
    std::set<std::string> unique(labels.begin(), labels.end());
    if (unique.size() < 2) throw ValidationError("degenerate label set: need at least 2 classes");
    return fit_probe_with_classes(Z, labels, {unique.begin(), unique.end()}, opts);
}

Eigen::VectorXd predict_scores(const ProbeModel& model, const Eigen::VectorXd& z) {
    if (z.size() != model.weights.cols()) {
        throw ValidationError("predict: expected dimension " +
                              std::to_string(model.weights.cols()) + ", got " +
                              std::to_string(z.size()));
    }
    return model.weights * z + model.biases;
}

std::string predict(const ProbeModel& model, const Eigen::VectorXd& z) {
    Eigen::VectorXd scores = predict_scores(model, z);
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < scores.size(); ++i) {
        if (scores[i] > scores[best]) best = i; // ties keep the earlier class
    }
    return model.classes[static_cast<std::size_t>(best)];
}

std::vector<std::string> predict_rows(const ProbeModel& model, const Eigen::MatrixXd& Z) {
    std::vector<std::string> out;
    out.reserve(static_cast<std::size_t>(Z.rows()));
    for (Eigen::Index i = 0; i < Z.rows(); ++i) {
        out.push_back(predict(model, Z.row(i).transpose()));
    }
    return out;
}

CvResult cross_validate(const Eigen::MatrixXd& Z, const std::vector<std::string>& labels,
                        int folds, std::uint64_t seed, const ProbeOptions& opts) {
    const Eigen::Index n = Z.rows();
    if (static_cast<std::size_t>(n) != labels.size()) {
        throw ValidationError("cross_validate: row/label count mismatch");
    }
    if (folds < 2) throw ValidationError("cross_validate: folds must be at least 2");
    if (static_cast<Eigen::Index>(folds) > n) {
        throw ValidationError("cross_validate: more folds than samples");
    }

    // class -> sample indices, in label order
    std::map<std::string, std::vector<Eigen::Index>> by_class;
    for (Eigen::Index i = 0; i < n; ++i) by_class[labels[static_cast<std::size_t>(i)]].push_back(i);

    bool stratified = true;
    for (const auto& [cls, idx] : by_class) {
        if (static_cast<int>(idx.size()) < folds) {
            stratified = false;
            break;
        }
    }

    std::vector<std::vector<Eigen::Index>> fold_members(static_cast<std::size_t>(folds));
    DetRng rng(seed);
    auto shuffle = [&](std::vector<Eigen::Index>& v) {
        for (std::size_t i = 0; i + 1 < v.size(); ++i) {
            std::size_t j = i + static_cast<std::size_t>(rng.next_below(v.size() - i));
            std::swap(v[i], v[j]);
        }
    };
    if (stratified) {
        for (auto& [cls, idx] : by_class) {
            shuffle(idx);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                fold_members[i % static_cast<std::size_t>(folds)].push_back(idx[i]);
            }
        }
    } else {
        std::vector<Eigen::Index> all(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
        shuffle(all);
        for (std::size_t i = 0; i < all.size(); ++i) {
            fold_members[i % static_cast<std::size_t>(folds)].push_back(all[i]);
        }
    }

    CvResult result;
    result.stratified = stratified;
    double correct_total = 0.0;
    for (int f = 0; f < folds; ++f) {
        const auto& test_idx = fold_members[static_cast<std::size_t>(f)];
        std::vector<Eigen::Index> train_idx;
        for (int g = 0; g < folds; ++g) {
            if (g == f) continue;
            const auto& m = fold_members[static_cast<std::size_t>(g)];
            train_idx.insert(train_idx.end(), m.begin(), m.end());
        }
        std::sort(train_idx.begin(), train_idx.end());

        Eigen::MatrixXd Ztr(static_cast<Eigen::Index>(train_idx.size()), Z.cols());
        std::vector<std::string> ytr;
        ytr.reserve(train_idx.size());
        for (std::size_t i = 0; i < train_idx.size(); ++i) {
            Ztr.row(static_cast<Eigen::Index>(i)) = Z.row(train_idx[i]);
            ytr.push_back(labels[static_cast<std::size_t>(train_idx[i])]);
        }
        ProbeModel model = fit_probe(Ztr, ytr, opts);

        double correct = 0.0;
        for (Eigen::Index idx : test_idx) {
            std::string pred = predict(model, Z.row(idx).transpose());
            if (pred == labels[static_cast<std::size_t>(idx)]) correct += 1.0;
        }
        result.fold_accuracy.push_back(test_idx.empty()
                                           ? 0.0
                                           : correct / static_cast<double>(test_idx.size()));
        correct_total += correct;
    }
    result.mean_accuracy = correct_total / static_cast<double>(n);
    return result;
}

void save_probe_model(const ProbeModel& model, const std::filesystem::path& path) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < model.weights.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < model.weights.cols(); ++j) row.push_back(model.weights(i, j));
        rows.push_back(std::move(row));
    }
    json biases = json::array();
    for (Eigen::Index i = 0; i < model.biases.size(); ++i) biases.push_back(model.biases[i]);
    json j{{"classes", model.classes}, {"weights", std::move(rows)},
           {"biases", std::move(biases)}, {"reg_c", model.reg_c},
           {"converged", model.converged}, {"iterations", model.iterations}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

ProbeModel load_probe_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("corrupt probe model file " + path.string());

    ProbeModel model;
    model.classes = j.at("classes").get<std::vector<std::string>>();
    const auto& rows = j.at("weights");
    const auto& biases = j.at("biases");
    Eigen::Index cols = rows.empty() ? 0 : static_cast<Eigen::Index>(rows[0].size());
    model.weights.resize(static_cast<Eigen::Index>(rows.size()), cols);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t k = 0; k < rows[i].size(); ++k) {
            model.weights(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
    }
    model.biases.resize(static_cast<Eigen::Index>(biases.size()));
    for (std::size_t i = 0; i < biases.size(); ++i) {
        model.biases[static_cast<Eigen::Index>(i)] = biases[i];
    }
    model.reg_c = j.at("reg_c");
    model.converged = j.at("converged");
    model.iterations = j.at("iterations");
    return model;
}

} // namespace lfa
