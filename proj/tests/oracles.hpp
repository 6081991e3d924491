// Test-only reference implementations, kept independent of the library code
// paths they check.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

namespace oracle {

// --- brute-force covariance eigendecomposition (cyclic Jacobi) ---------------
//
// Deliberately not Eigen: explicit covariance loops plus Jacobi rotations give
// an independent route to the spectrum used by the latent module.

struct EigenPair {
    double value;
    std::vector<double> vector;
};

inline std::vector<std::vector<double>> covariance_population(
    const std::vector<std::vector<double>>& rows) {
    std::size_t n = rows.size();
    std::size_t d = rows.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : rows) {
        for (std::size_t a = 0; a < d; ++a) {
            for (std::size_t b = 0; b < d; ++b) {
                cov[a][b] += (r[a] - mean[a]) * (r[b] - mean[b]);
            }
        }
    }
    for (auto& row : cov) {
        for (auto& v : row) v /= static_cast<double>(n);
    }
    return cov;
}

// Cyclic Jacobi sweeps until off-diagonal mass is negligible. Returns pairs
// sorted by descending eigenvalue.
inline std::vector<EigenPair> jacobi_eigen(std::vector<std::vector<double>> A) {
    std::size_t d = A.size();
    std::vector<std::vector<double>> V(d, std::vector<double>(d, 0.0));
    for (std::size_t i = 0; i < d; ++i) V[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) off += A[p][q] * A[p][q];
        }
        if (off < 1e-26) break;
        for (std::size_t p = 0; p < d; ++p) {
            for (std::size_t q = p + 1; q < d; ++q) {
                if (std::abs(A[p][q]) < 1e-300) continue;
                double theta = (A[q][q] - A[p][p]) / (2.0 * A[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (std::size_t k = 0; k < d; ++k) {
                    double akp = A[k][p], akq = A[k][q];
                    A[k][p] = c * akp - s * akq;
                    A[k][q] = s * akp + c * akq;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    double apk = A[p][k], aqk = A[q][k];
                    A[p][k] = c * apk - s * aqk;
                    A[q][k] = s * apk + c * aqk;
                }
                for (std::size_t k = 0; k < d; ++k) {
                    double vkp = V[k][p], vkq = V[k][q];
                    V[k][p] = c * vkp - s * vkq;
                    V[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<EigenPair> pairs(d);
    for (std::size_t i = 0; i < d; ++i) {
        pairs[i].value = A[i][i];
        pairs[i].vector.resize(d);
        for (std::size_t k = 0; k < d; ++k) pairs[i].vector[k] = V[k][i];
    }
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const EigenPair& a, const EigenPair& b) { return a.value > b.value; });
    return pairs;
}

// Same sign convention as the library: the first entry whose magnitude ties
// the maximum (relative 1e-9) is made non-negative.
inline void sign_normalize(std::vector<double>& v) {
    double max_abs = 0.0;
    for (double x : v) max_abs = std::max(max_abs, std::abs(x));
    for (std::size_t j = 0; j < v.size(); ++j) {
        if (std::abs(v[j]) >= max_abs * (1.0 - 1e-9)) {
            if (v[j] < 0.0) {
                for (auto& x : v) x = -x;
            }
            return;
        }
    }
}

// --- exhaustive LCS -----------------------------------------------------------
//
// Enumerates every subsequence of `a` (bitmask) and keeps the longest that is
// also a subsequence of `b`. Exponential, for short inputs only.

inline bool is_subsequence(const std::vector<std::string>& needle,
                           const std::vector<std::string>& hay) {
    std::size_t i = 0;
    for (const auto& h : hay) {
        if (i < needle.size() && needle[i] == h) ++i;
    }
    return i == needle.size();
}

inline std::size_t exhaustive_lcs(const std::vector<std::string>& a,
                                  const std::vector<std::string>& b) {
    std::size_t best = 0;
    for (std::size_t mask = 0; mask < (std::size_t{1} << a.size()); ++mask) {
        std::vector<std::string> sub;
        for (std::size_t i = 0; i < a.size(); ++i) {
            if (mask & (std::size_t{1} << i)) sub.push_back(a[i]);
        }
        if (sub.size() > best && is_subsequence(sub, b)) best = sub.size();
    }
    return best;
}

// --- misc -----------------------------------------------------------------------

// Two-pass per-dimension population variance.
inline std::vector<double> two_pass_variance(const std::vector<std::vector<double>>& rows) {
    std::size_t n = rows.size();
    std::size_t d = rows.front().size();
    std::vector<double> mean(d, 0.0), var(d, 0.0);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    for (auto& m : mean) m /= static_cast<double>(n);
    for (const auto& r : rows) {
        for (std::size_t j = 0; j < d; ++j) {
            double dx = r[j] - mean[j];
            var[j] += dx * dx;
        }
    }
    for (auto& v : var) v /= static_cast<double>(n);
    return var;
}

// Direct product-moment formula on raw sums (different arrangement from the
// library's centered accumulation).
inline double pearson_direct(const std::vector<double>& x, const std::vector<double>& y) {
    double n = static_cast<double>(x.size());
    double sx = 0, sy = 0, sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sx += x[i];
        sy += y[i];
        sxy += x[i] * y[i];
        sxx += x[i] * x[i];
        syy += y[i] * y[i];
    }
    double num = n * sxy - sx * sy;
    double den = std::sqrt(n * sxx - sx * sx) * std::sqrt(n * syy - sy * sy);
    return num / den;
}

} // namespace oracle
