#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace dwellsim {

using Scalar = double;
using StateVec = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Feedback availability: `a` while the true state is inside the feedback
/// region (observer active), `u` while it is outside (predictor active).
enum class Phase { a, u };

[[nodiscard]] constexpr char phase_char(Phase p) noexcept { return p == Phase::a ? 'a' : 'u'; }

// ── Errors ───────────────────────────────────────────────────────────────────

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid or inconsistent configuration. `path` names the offending field
/// (e.g. "estimator.k2") when one applies.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg, std::string path = {})
        : Error(path.empty() ? msg : path + ": " + msg), path_(std::move(path)) {}
    [[nodiscard]] const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

/// Input for which an operation is undefined (e.g. projecting the region center).
class DegenerateInput : public Error {
public:
    using Error::Error;
};

/// Caller broke a documented precondition.
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// The requested gains, budgets or geometry admit no valid plan.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

/// Non-finite value appeared during integration.
class NumericFault : public Error {
public:
    NumericFault(const std::string& msg, std::size_t step, double t)
        : Error(msg), step_(step), t_(t) {}
    [[nodiscard]] std::size_t step() const noexcept { return step_; }
    [[nodiscard]] double time() const noexcept { return t_; }

private:
    std::size_t step_;
    double t_;
};

// ── Small helpers ────────────────────────────────────────────────────────────

[[nodiscard]] inline bool all_finite(const StateVec& v) noexcept { return v.allFinite(); }

inline void require_dim(const StateVec& v, Index n, std::string_view what) {
    if (v.size() != n) {
        throw ConfigError(std::string(what) + " has dimension " + std::to_string(v.size()) +
                          ", expected " + std::to_string(n));
    }
}

/// Componentwise sign with sgn(0) = 0.
[[nodiscard]] inline StateVec sgn(const StateVec& v) {
    return v.unaryExpr([](double c) { return c > 0.0 ? 1.0 : (c < 0.0 ? -1.0 : 0.0); });
}

/// Smallest eigenvalue of a symmetric matrix.
[[nodiscard]] inline double min_eigenvalue(const Matrix& m) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

/// Largest singular value.
[[nodiscard]] inline double spectral_norm(const Matrix& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(m);
    return svd.singularValues()(0);
}

/// Throws ConfigError unless `m` is square, symmetric and positive definite.
inline void require_spd(const Matrix& m, std::string_view what) {
    const std::string name(what);
    if (m.rows() != m.cols()) throw ConfigError("matrix must be square", name);
    if (!m.allFinite()) throw ConfigError("matrix has non-finite entries", name);
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        throw ConfigError("matrix must be symmetric", name);
    }
    const double lo = min_eigenvalue(m);
    if (!(lo > 0.0)) {
        throw ConfigError("matrix must be positive definite (min eigenvalue " + std::to_string(lo) + ")",
                          name);
    }
}

}  // namespace dwellsim
