#pragma once

#include <filesystem>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace lfa {

// Standardization statistics plus the retained principal axes; fit on
// unperturbed embeddings only, then frozen.
struct LatentModel {
    Eigen::VectorXd mean;               // length d
    Eigen::VectorXd scale;              // length d, per-dimension stddev (1 for constant dims)
    Eigen::MatrixXd components;         // k x d, orthonormal rows
    Eigen::VectorXd explained_variance_ratio; // length k, non-increasing
    double var_target = 0.9;

    Eigen::Index input_dim() const { return mean.size(); }
    Eigen::Index retained() const { return components.rows(); }
    double cumulative_ratio() const { return explained_variance_ratio.sum(); }
};

// Population-statistics standardization followed by eigendecomposition of the
// standardized covariance. k is the smallest prefix whose cumulative
// explained-variance ratio reaches var_target. Component signs are normalized
// so each row's largest-magnitude entry is non-negative.
LatentModel fit_latent(const Eigen::MatrixXd& X, double var_target);

// y = components * ((x - mean) / scale)
Eigen::VectorXd project(const LatentModel& model, const Eigen::VectorXd& x);
Eigen::MatrixXd project_rows(const LatentModel& model, const Eigen::MatrixXd& X);

// Mean Euclidean distance between matched rows.
double centroid_displacement(const Eigen::MatrixXd& originals, const Eigen::MatrixXd& perturbed);

struct VarianceProfileEntry {
    std::vector<int> dims;      // top_m dimension indices by variance share
    std::vector<double> shares; // matching shares of total variance
};

// Per-dimension population variance divided by total variance; returns the
// top_m dimensions. Shares over all dimensions sum to 1.
VarianceProfileEntry variance_profile(const Eigen::MatrixXd& X, int top_m);

// (component count, cumulative explained-variance ratio) pairs for the full
// spectrum of the standardized covariance. Monotone, ends at 1.
std::vector<std::pair<int, double>> elbow_curve(const Eigen::MatrixXd& X);

void save_latent_model(const LatentModel& model, const std::filesystem::path& path);
LatentModel load_latent_model(const std::filesystem::path& path);

} // namespace lfa
