#pragma once

#include <span>

#include <Eigen/Dense>

#include "sectree/providers.hpp"

namespace sectree {

// Rows of the returned matrix are the input vectors.
Eigen::MatrixXd to_matrix(std::span<const EmbeddingVector> vectors);

class DimensionReducer {
public:
    virtual ~DimensionReducer() = default;
    virtual Eigen::MatrixXd reduce(const Eigen::MatrixXd& rows, int reduced_dim) const = 0;
};

// Principal-component projection of unit-normalized rows, so Euclidean
// geometry in the output follows cosine geometry in the input.
//  - input dimension <= reduced_dim: rows returned unchanged;
//  - fewer than two rows, or all rows identical: every row maps to the origin;
//  - otherwise exactly reduced_dim columns, zero-filled past the data rank.
// Component signs are fixed so the largest-magnitude coordinate is positive.
class PcaReducer final : public DimensionReducer {
public:
    Eigen::MatrixXd reduce(const Eigen::MatrixXd& rows, int reduced_dim) const override;
};

Eigen::MatrixXd reduce_dims(const Eigen::MatrixXd& rows, int reduced_dim);

} // namespace sectree
