#include "sectree/reduce.hpp"

#include <cmath>

#include "sectree/error.hpp"

namespace sectree {

Eigen::MatrixXd to_matrix(std::span<const EmbeddingVector> vectors) {
    if (vectors.empty()) return {};
    const auto d = static_cast<Eigen::Index>(vectors.front().values.size());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(vectors.size()), d);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        if (static_cast<Eigen::Index>(vectors[i].values.size()) != d) {
            throw Error(ErrorKind::DimensionMismatch, "embeddings of unequal dimension");
        }
        for (Eigen::Index j = 0; j < d; ++j) m(static_cast<Eigen::Index>(i), j) = vectors[i].values[j];
    }
    return m;
}

Eigen::MatrixXd PcaReducer::reduce(const Eigen::MatrixXd& rows, int reduced_dim) const {
    if (reduced_dim < 1) throw Error(ErrorKind::InvalidConfig, "reduced_dim must be >= 1");
    const Eigen::Index n = rows.rows();
    const Eigen::Index d = rows.cols();
    const Eigen::Index r = reduced_dim;
    if (d <= r) return rows;
    if (n < 2) return Eigen::MatrixXd::Zero(n, r);

    Eigen::MatrixXd x = rows;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double norm = x.row(i).norm();
        if (norm > 0) x.row(i) /= norm;
    }
    x.rowwise() -= x.colwise().mean();
    if (x.cwiseAbs().maxCoeff() < 1e-12) return Eigen::MatrixXd::Zero(n, r);

    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, r);
    if (n <= d) {
        // Gram route: eigenvectors u of X X^T give projections sqrt(lambda) * u.
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x * x.transpose());
        const Eigen::VectorXd& values = eig.eigenvalues();
        const Eigen::MatrixXd& vectors = eig.eigenvectors();
        const double scale = values(n - 1);
        for (Eigen::Index c = 0; c < r && c < n; ++c) {
            const double lambda = values(n - 1 - c);
            if (lambda <= scale * 1e-12) break;
            out.col(c) = vectors.col(n - 1 - c) * std::sqrt(lambda);
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(x.transpose() * x);
        const Eigen::VectorXd& values = eig.eigenvalues();
        const Eigen::MatrixXd& vectors = eig.eigenvectors();
        const double scale = values(d - 1);
        for (Eigen::Index c = 0; c < r; ++c) {
            if (values(d - 1 - c) <= scale * 1e-12) break;
            out.col(c) = x * vectors.col(d - 1 - c);
        }
    }
    for (Eigen::Index c = 0; c < r; ++c) {
        Eigen::Index arg = 0;
        out.col(c).cwiseAbs().maxCoeff(&arg);
        if (out(arg, c) < 0) out.col(c) *= -1.0;
    }
    return out;
}

Eigen::MatrixXd reduce_dims(const Eigen::MatrixXd& rows, int reduced_dim) {
    return PcaReducer{}.reduce(rows, reduced_dim);
}

} // namespace sectree
