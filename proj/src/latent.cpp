#include "lfa/latent.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "lfa/errors.hpp"

namespace lfa {

using nlohmann::json;

namespace {

void check_finite(const Eigen::MatrixXd& X) {
    if (!X.allFinite()) throw ValidationError("non-finite value in embedding matrix");
}

struct Standardized {
    Eigen::VectorXd mean;
    Eigen::VectorXd scale;
    Eigen::MatrixXd S; // (X - mean) / scale
};

Standardized standardize(const Eigen::MatrixXd& X) {
    const auto n = X.rows();
    Standardized out;
    out.mean = X.colwise().mean();
    Eigen::MatrixXd centered = X.rowwise() - out.mean.transpose();
    Eigen::VectorXd var = centered.array().square().colwise().mean();
    out.scale = var.array().sqrt();
    for (Eigen::Index j = 0; j < out.scale.size(); ++j) {
        // constant dimensions keep scale 1 so they cannot poison the fit
        if (out.scale[j] <= 1e-12 * (1.0 + std::abs(out.mean[j]))) out.scale[j] = 1.0;
    }
    out.S = centered.array().rowwise() / out.scale.transpose().array();
    (void)n;
    return out;
}

struct Spectrum {
    Eigen::VectorXd ratios;  // descending, non-negative, sums to 1
    Eigen::MatrixXd vectors; // one eigenvector per row, aligned with ratios
};

// Eigendecomposition of S^T S / n, eigenvalues sorted descending and clamped
// at zero, ratios normalized by the total.
Spectrum covariance_spectrum(const Eigen::MatrixXd& S) {
    const auto n = static_cast<double>(S.rows());
    Eigen::MatrixXd cov = (S.transpose() * S) / n;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw ValidationError("eigendecomposition failed");

    const Eigen::Index d = cov.rows();
    Eigen::VectorXd eigenvalues(d);
    Eigen::MatrixXd vectors(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        // Eigen sorts ascending; reverse and clamp round-off negatives
        eigenvalues[i] = std::max(0.0, solver.eigenvalues()[d - 1 - i]);
        vectors.row(i) = solver.eigenvectors().col(d - 1 - i).transpose();
    }
    double total = eigenvalues.sum();
    if (total <= 0.0) throw ValidationError("zero total variance: all dimensions constant");

    Spectrum spec;
    spec.ratios = eigenvalues / total;
    spec.vectors = std::move(vectors);
    return spec;
}

// Largest-magnitude entry of each row made non-negative. Ties (up to a
// relative 1e-9, so solver round-off cannot reorder them) resolve to the
// first index, keeping fits reproducible across eigensolvers.
void normalize_signs(Eigen::MatrixXd& rows) {
    for (Eigen::Index i = 0; i < rows.rows(); ++i) {
        double max_abs = rows.row(i).cwiseAbs().maxCoeff();
        for (Eigen::Index j = 0; j < rows.cols(); ++j) {
            if (std::abs(rows(i, j)) >= max_abs * (1.0 - 1e-9)) {
                if (rows(i, j) < 0.0) rows.row(i) = -rows.row(i);
                break;
            }
        }
    }
}

} // namespace

LatentModel fit_latent(const Eigen::MatrixXd& X, double var_target) {
    if (X.rows() < 2) throw ValidationError("fit_latent requires at least 2 rows");
    if (!(var_target > 0.0 && var_target <= 1.0)) {
        throw ValidationError("var_target must lie in (0,1]");
    }
    check_finite(X);

    Standardized std_data = standardize(X);
    Spectrum spec = covariance_spectrum(std_data.S);

    Eigen::Index k = 0;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < spec.ratios.size(); ++i) {
        cum += spec.ratios[i];
        k = i + 1;
        if (cum >= var_target - 1e-12) break;
    }

    LatentModel model;
    model.mean = std::move(std_data.mean);
    model.scale = std::move(std_data.scale);
    model.components = spec.vectors.topRows(k);
    normalize_signs(model.components);
    model.explained_variance_ratio = spec.ratios.head(k);
    model.var_target = var_target;
    return model;
}

Eigen::VectorXd project(const LatentModel& model, const Eigen::VectorXd& x) {
    if (x.size() != model.input_dim()) {
        throw ValidationError("project: expected dimension " + std::to_string(model.input_dim()) +
                              ", got " + std::to_string(x.size()));
    }
    Eigen::VectorXd standardized = (x - model.mean).array() / model.scale.array();
    return model.components * standardized;
}

Eigen::MatrixXd project_rows(const LatentModel& model, const Eigen::MatrixXd& X) {
    if (X.cols() != model.input_dim()) {
        throw ValidationError("project_rows: dimension mismatch");
    }
    Eigen::MatrixXd standardized =
        (X.rowwise() - model.mean.transpose()).array().rowwise() / model.scale.transpose().array();
    return standardized * model.components.transpose();
}

double centroid_displacement(const Eigen::MatrixXd& originals, const Eigen::MatrixXd& perturbed) {
    if (originals.rows() != perturbed.rows() || originals.cols() != perturbed.cols()) {
        throw ValidationError("centroid_displacement: shape mismatch");
    }
    if (originals.rows() == 0) throw ValidationError("centroid_displacement: empty input");
    return (originals - perturbed).rowwise().norm().mean();
}

VarianceProfileEntry variance_profile(const Eigen::MatrixXd& X, int top_m) {
    if (X.rows() < 2) throw ValidationError("variance_profile requires at least 2 rows");
    check_finite(X);
    Eigen::VectorXd mean = X.colwise().mean();
    Eigen::VectorXd var =
        (X.rowwise() - mean.transpose()).array().square().colwise().mean();
    double total = var.sum();
    if (total <= 0.0) throw ValidationError("variance_profile: zero total variance");

    std::vector<int> order(static_cast<std::size_t>(X.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return var[a] > var[b]; });

    VarianceProfileEntry entry;
    int m = std::min<int>(top_m, static_cast<int>(order.size()));
    for (int i = 0; i < m; ++i) {
        entry.dims.push_back(order[static_cast<std::size_t>(i)]);
        entry.shares.push_back(var[order[static_cast<std::size_t>(i)]] / total);
    }
    return entry;
}

std::vector<std::pair<int, double>> elbow_curve(const Eigen::MatrixXd& X) {
    if (X.rows() < 2) throw ValidationError("elbow_curve requires at least 2 rows");
    check_finite(X);
    Spectrum spec = covariance_spectrum(standardize(X).S);
    std::vector<std::pair<int, double>> curve;
    double cum = 0.0;
    for (Eigen::Index i = 0; i < spec.ratios.size(); ++i) {
        cum += spec.ratios[i];
        curve.emplace_back(static_cast<int>(i + 1), cum);
    }
    return curve;
}

namespace {

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i];
    return v;
}

} // namespace

void save_latent_model(const LatentModel& model, const std::filesystem::path& path) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < model.components.rows(); ++i) {
        rows.push_back(vector_to_json(model.components.row(i)));
    }
    json j{{"mean", vector_to_json(model.mean)},
           {"scale", vector_to_json(model.scale)},
           {"components", std::move(rows)},
           {"explained_variance_ratio", vector_to_json(model.explained_variance_ratio)},
           {"var_target", model.var_target}};
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out << j.dump(2) << '\n';
}

LatentModel load_latent_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ValidationError("corrupt latent model file " + path.string());

    LatentModel model;
    model.mean = vector_from_json(j.at("mean"));
    model.scale = vector_from_json(j.at("scale"));
    const auto& rows = j.at("components");
    model.components.resize(static_cast<Eigen::Index>(rows.size()), model.mean.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        model.components.row(static_cast<Eigen::Index>(i)) = vector_from_json(rows[i]);
    }
    model.explained_variance_ratio = vector_from_json(j.at("explained_variance_ratio"));
    model.var_target = j.at("var_target");
    return model;
}

} // namespace lfa
