#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lfa {

// One-vs-rest L2 logistic probe over latent coordinates. The inverse
// regularization strength multiplies the data term: per class c the fit
// minimizes 0.5*||w||^2 + reg_c * sum_i log(1 + exp(-y_i (w.z_i + b))); the
// bias is unpenalized.
struct ProbeModel {
    std::vector<std::string> classes; // sorted; argmax ties resolve to the first
    Eigen::MatrixXd weights;          // |classes| x k
    Eigen::VectorXd biases;
    double reg_c = 10.0;
    bool converged = false;
    int iterations = 0; // max over the per-class fits
};

struct ProbeOptions {
    double reg_c = 10.0;
    int max_iter = 1000;
    double tol = 1e-6; // gradient infinity-norm
    // observability hook: called as (class_index, iteration, objective)
    std::function<void(std::size_t, int, double)> trace;
};

ProbeModel fit_probe(const Eigen::MatrixXd& Z, const std::vector<std::string>& labels,
                     const ProbeOptions& opts = {});

// With an explicit class order; every listed class must occur in labels.
ProbeModel fit_probe_with_classes(const Eigen::MatrixXd& Z, const std::vector<std::string>& labels,
                                  std::vector<std::string> classes, const ProbeOptions& opts = {});

std::string predict(const ProbeModel& model, const Eigen::VectorXd& z);
Eigen::VectorXd predict_scores(const ProbeModel& model, const Eigen::VectorXd& z);
std::vector<std::string> predict_rows(const ProbeModel& model, const Eigen::MatrixXd& Z);

// Regularized objective and its gradient for one binary problem; exposed so
// tests can finite-difference the gradient. theta = [w..., b], y in {-1,+1}.
double binary_objective(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                        const Eigen::VectorXd& theta, double reg_c);
Eigen::VectorXd binary_gradient(const Eigen::MatrixXd& Z, const Eigen::VectorXd& y,
                                const Eigen::VectorXd& theta, double reg_c);

struct CvResult {
    std::vector<double> fold_accuracy;
    double mean_accuracy = 0.0;
    bool stratified = true; // false when a class count < folds forced the fallback
};

// Stratified k-fold with a seeded shuffle; every sample is scored exactly
// once. Falls back to unstratified folds when some class has fewer samples
// than folds.
CvResult cross_validate(const Eigen::MatrixXd& Z, const std::vector<std::string>& labels,
                        int folds, std::uint64_t seed, const ProbeOptions& opts = {});

void save_probe_model(const ProbeModel& model, const std::filesystem::path& path);
ProbeModel load_probe_model(const std::filesystem::path& path);

} // namespace lfa
