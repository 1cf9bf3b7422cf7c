#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace embgeom {

/// Read-only exact nearest-neighbour index over a fixed point set.
/// Linear scan with (distance, row) ordering, so queries are deterministic
/// and safe to issue from multiple threads concurrently.
class KnnIndex {
public:
    explicit KnnIndex(Eigen::MatrixXd points);

    struct Result {
        std::vector<int> indices;       // ascending by (distance, row index)
        std::vector<double> distances;  // matching Euclidean distances
    };

    /// The k nearest rows to q. A row equal to `exclude` is skipped.
    Result query(const Eigen::Ref<const Eigen::VectorXd>& q, int k, int exclude = -1) const;

    /// Index of the single nearest row (ties broken by row index).
    int nearest(const Eigen::Ref<const Eigen::VectorXd>& q, int exclude = -1) const;

    const Eigen::MatrixXd& points() const { return points_; }
    Eigen::Index size() const { return points_.rows(); }

private:
    Eigen::MatrixXd points_;
};

/// Mean distance from a point to its nearest neighbour within the cloud.
/// Exact for clouds up to `max_queries` points; above that, an evenly spaced
/// subset of query points is used, each still searched against the full cloud.
double mean_nn_distance(const Eigen::MatrixXd& points, int max_queries = 4096);

}  // namespace embgeom
