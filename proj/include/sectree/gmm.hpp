#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace sectree {

struct GmmOptions {
    int max_components = 50;
    int max_iters = 200;
    // Convergence: mean per-point log-likelihood gain below this value.
    double tol = 1e-4;
    // Per-dimension variance floor is max(variance_floor, relative_variance_floor * data variance).
    double variance_floor = 1e-6;
    double relative_variance_floor = 0.05;
    std::uint64_t seed = 0;
};

// Diagonal-covariance Gaussian mixture.
struct GmmModel {
    int n_components = 0;
    Eigen::MatrixXd means;     // K x d
    Eigen::MatrixXd variances; // K x d
    Eigen::VectorXd weights;   // K
    std::vector<double> log_likelihood_trace;
    double log_likelihood = 0;
    double bic = 0;
    int iterations = 0;
    bool converged = false;

    int dimension() const { return static_cast<int>(means.cols()); }
    int free_parameters() const;
    // n x K posterior membership probabilities; rows sum to 1.
    Eigen::MatrixXd responsibilities(const Eigen::MatrixXd& points) const;
    double total_log_likelihood(const Eigen::MatrixXd& points) const;
};

// EM for a fixed component count, seeded by k-means++ from options.seed.
GmmModel fit_gmm_components(const Eigen::MatrixXd& points, int n_components, const GmmOptions& options);

// Fits 1..min(max_components, n) components and keeps the lowest BIC
// (ties favour fewer components).
GmmModel fit_gmm(const Eigen::MatrixXd& points, const GmmOptions& options);

double bic_score(double log_likelihood, int free_parameters, Eigen::Index n_points);

// Point p joins component c iff r_pc >= threshold; the argmax component is
// always included. Component indices within each set are ascending.
std::vector<std::vector<int>> soft_assign(const Eigen::MatrixXd& responsibilities, double threshold);
std::vector<std::vector<int>> soft_assign(const GmmModel& model, const Eigen::MatrixXd& points, double threshold);

} // namespace sectree
