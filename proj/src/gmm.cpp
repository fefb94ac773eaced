#include "sectree/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "sectree/error.hpp"
#include "sectree/hash.hpp"

namespace sectree {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Eigen::RowVectorXd variance_floor(const Eigen::MatrixXd& points, const GmmOptions& options) {
    const Eigen::RowVectorXd mean = points.colwise().mean();
    Eigen::RowVectorXd var = (points.rowwise() - mean).array().square().colwise().mean();
    return (var * options.relative_variance_floor).cwiseMax(options.variance_floor);
}

// Log of the weighted component densities, n x K.
Eigen::MatrixXd log_joint(const GmmModel& m, const Eigen::MatrixXd& points) {
    const Eigen::Index n = points.rows();
    const Eigen::Index k = m.n_components;
    const Eigen::Index d = points.cols();
    Eigen::MatrixXd lp(n, k);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    for (Eigen::Index c = 0; c < k; ++c) {
        if (m.weights(c) <= 0) {
            lp.col(c).setConstant(kNegInf);
            continue;
        }
        double log_norm = std::log(m.weights(c));
        for (Eigen::Index j = 0; j < d; ++j) log_norm -= 0.5 * (log2pi + std::log(m.variances(c, j)));
        const Eigen::RowVectorXd inv_var = m.variances.row(c).cwiseInverse();
        for (Eigen::Index i = 0; i < n; ++i) {
            const double maha = ((points.row(i) - m.means.row(c)).array().square() * inv_var.array()).sum();
            lp(i, c) = log_norm - 0.5 * maha;
        }
    }
    return lp;
}

// Normalizes log_joint rows in place into responsibilities; returns total log-likelihood.
double normalize_rows(Eigen::MatrixXd& lp) {
    double total = 0;
    for (Eigen::Index i = 0; i < lp.rows(); ++i) {
        const double mx = lp.row(i).maxCoeff();
        double s = 0;
        for (Eigen::Index c = 0; c < lp.cols(); ++c) s += lp(i, c) == kNegInf ? 0.0 : std::exp(lp(i, c) - mx);
        const double lse = mx + std::log(s);
        total += lse;
        for (Eigen::Index c = 0; c < lp.cols(); ++c) lp(i, c) = lp(i, c) == kNegInf ? 0.0 : std::exp(lp(i, c) - lse);
    }
    return total;
}

void m_step(GmmModel& m, const Eigen::MatrixXd& points, const Eigen::MatrixXd& resp, const Eigen::RowVectorXd& floor) {
    const double n = static_cast<double>(points.rows());
    for (Eigen::Index c = 0; c < m.n_components; ++c) {
        const double nk = resp.col(c).sum();
        m.weights(c) = nk / n;
        if (nk <= 0) continue; // dead component keeps its old location
        const Eigen::RowVectorXd mean = (resp.col(c).transpose() * points) / nk;
        const Eigen::MatrixXd centered = points.rowwise() - mean;
        Eigen::RowVectorXd var = (resp.col(c).transpose() * centered.array().square().matrix()) / nk;
        m.means.row(c) = mean;
        m.variances.row(c) = var.cwiseMax(floor);
    }
}

std::vector<Eigen::Index> kmeanspp(const Eigen::MatrixXd& points, int k, std::mt19937_64& rng) {
    const Eigen::Index n = points.rows();
    std::vector<Eigen::Index> centers;
    std::vector<bool> used(static_cast<std::size_t>(n), false);
    auto first = static_cast<Eigen::Index>(uniform01(rng) * static_cast<double>(n));
    first = std::min(first, n - 1);
    centers.push_back(first);
    used[static_cast<std::size_t>(first)] = true;
    Eigen::VectorXd d2 = (points.rowwise() - points.row(first)).rowwise().squaredNorm();
    while (static_cast<int>(centers.size()) < k) {
        const double total = d2.sum();
        Eigen::Index pick = -1;
        if (total > 0) {
            const double target = uniform01(rng) * total;
            double acc = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += d2(i);
                if (d2(i) > 0 && acc >= target) {
                    pick = i;
                    break;
                }
            }
            if (pick < 0) {
                for (Eigen::Index i = n - 1; i >= 0; --i) {
                    if (d2(i) > 0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            for (Eigen::Index i = 0; i < n; ++i) {
                if (!used[static_cast<std::size_t>(i)]) {
                    pick = i;
                    break;
                }
            }
        }
        centers.push_back(pick);
        used[static_cast<std::size_t>(pick)] = true;
        d2 = d2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
    }
    return centers;
}

} // namespace

int GmmModel::free_parameters() const {
    const int d = dimension();
    return (n_components - 1) + 2 * n_components * d;
}

Eigen::MatrixXd GmmModel::responsibilities(const Eigen::MatrixXd& points) const {
    Eigen::MatrixXd lp = log_joint(*this, points);
    normalize_rows(lp);
    return lp;
}

double GmmModel::total_log_likelihood(const Eigen::MatrixXd& points) const {
    Eigen::MatrixXd lp = log_joint(*this, points);
    return normalize_rows(lp);
}

double bic_score(double log_likelihood, int free_parameters, Eigen::Index n_points) {
    return -2.0 * log_likelihood + free_parameters * std::log(static_cast<double>(n_points));
}

GmmModel fit_gmm_components(const Eigen::MatrixXd& points, int n_components, const GmmOptions& options) {
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (n < 1) throw Error(ErrorKind::InvalidInput, "cannot fit a mixture to zero points");
    if (n_components < 1 || n_components > n) {
        throw Error(ErrorKind::InvalidInput, "component count must lie in [1, n_points]");
    }
    const Eigen::RowVectorXd floor = variance_floor(points, options);
    std::mt19937_64 rng(mix64(options.seed ^ (0x5851f42d4c957f2dULL * static_cast<std::uint64_t>(n_components))));

    GmmModel m;
    m.n_components = n_components;
    m.means.resize(n_components, d);
    m.variances.resize(n_components, d);
    m.weights.resize(n_components);

    const auto centers = kmeanspp(points, n_components, rng);
    const Eigen::RowVectorXd global_var =
        (points.rowwise() - points.colwise().mean()).array().square().colwise().mean().matrix().cwiseMax(floor);
    for (int c = 0; c < n_components; ++c) {
        m.means.row(c) = points.row(centers[static_cast<std::size_t>(c)]);
        m.variances.row(c) = global_var;
    }
    Eigen::MatrixXd resp = Eigen::MatrixXd::Zero(n, n_components);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index best = 0;
        (m.means.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
        resp(i, best) = 1.0;
    }
    m_step(m, points, resp, floor);

    resp = log_joint(m, points);
    double ll = normalize_rows(resp);
    m.log_likelihood_trace.push_back(ll);
    for (int it = 1; it <= options.max_iters; ++it) {
        m_step(m, points, resp, floor);
        resp = log_joint(m, points);
        const double next = normalize_rows(resp);
        m.log_likelihood_trace.push_back(next);
        m.iterations = it;
        const bool done = (next - ll) / static_cast<double>(n) < options.tol;
        ll = next;
        if (done) {
            m.converged = true;
            break;
        }
    }
    m.log_likelihood = ll;
    m.bic = bic_score(ll, m.free_parameters(), n);
    return m;
}

GmmModel fit_gmm(const Eigen::MatrixXd& points, const GmmOptions& options) {
    const auto n = static_cast<int>(points.rows());
    if (n < 1) throw Error(ErrorKind::InvalidInput, "cannot fit a mixture to zero points");
    const int max_k = std::max(1, std::min(options.max_components, n));
    GmmModel best = fit_gmm_components(points, 1, options);
    for (int k = 2; k <= max_k; ++k) {
        GmmModel candidate = fit_gmm_components(points, k, options);
        if (candidate.bic < best.bic) best = std::move(candidate);
    }
    return best;
}

std::vector<std::vector<int>> soft_assign(const Eigen::MatrixXd& responsibilities, double threshold) {
    std::vector<std::vector<int>> out(static_cast<std::size_t>(responsibilities.rows()));
    for (Eigen::Index i = 0; i < responsibilities.rows(); ++i) {
        Eigen::Index arg = 0;
        responsibilities.row(i).maxCoeff(&arg);
        auto& members = out[static_cast<std::size_t>(i)];
        for (Eigen::Index c = 0; c < responsibilities.cols(); ++c) {
            if (c == arg || responsibilities(i, c) >= threshold) members.push_back(static_cast<int>(c));
        }
    }
    return out;
}

std::vector<std::vector<int>> soft_assign(const GmmModel& model, const Eigen::MatrixXd& points, double threshold) {
    return soft_assign(model.responsibilities(points), threshold);
}

} // namespace sectree
