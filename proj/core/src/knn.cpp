#include "embgeom/knn.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "parallel.hpp"

namespace embgeom {

KnnIndex::KnnIndex(Eigen::MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() == 0) throw std::invalid_argument("KnnIndex: empty point set");
}

KnnIndex::Result KnnIndex::query(const Eigen::Ref<const Eigen::VectorXd>& q, int k, int exclude) const {
    if (q.size() != points_.cols()) throw std::invalid_argument("KnnIndex::query: dimension mismatch");
    const int n = static_cast<int>(points_.rows());
    const int avail = n - (exclude >= 0 && exclude < n ? 1 : 0);
    if (k < 1 || k > avail) throw std::invalid_argument("KnnIndex::query: k out of range");

    std::vector<std::pair<double, int>> dist;
    dist.reserve(n);
    for (int i = 0; i < n; ++i) {
        if (i == exclude) continue;
        dist.emplace_back((points_.row(i).transpose() - q).squaredNorm(), i);
    }
    std::partial_sort(dist.begin(), dist.begin() + k, dist.end());
    Result out;
    out.indices.reserve(k);
    out.distances.reserve(k);
    for (int j = 0; j < k; ++j) {
        out.indices.push_back(dist[j].second);
        out.distances.push_back(std::sqrt(dist[j].first));
    }
    return out;
}

int KnnIndex::nearest(const Eigen::Ref<const Eigen::VectorXd>& q, int exclude) const {
    if (q.size() != points_.cols()) throw std::invalid_argument("KnnIndex::nearest: dimension mismatch");
    const int n = static_cast<int>(points_.rows());
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        if (i == exclude) continue;
        const double d = (points_.row(i).transpose() - q).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best < 0) throw std::invalid_argument("KnnIndex::nearest: no candidates");
    return best;
}

double mean_nn_distance(const Eigen::MatrixXd& points, int max_queries) {
    const Eigen::Index n = points.rows();
    if (n < 2) throw std::invalid_argument("mean_nn_distance: at least two points required");

    std::vector<Eigen::Index> queries;
    if (n <= max_queries) {
        queries.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) queries[i] = i;
    } else {
        queries.resize(max_queries);
        for (int i = 0; i < max_queries; ++i)
            queries[i] = static_cast<Eigen::Index>(static_cast<double>(i) * static_cast<double>(n) / max_queries);
    }

    std::vector<double> nearest(queries.size());
    detail::parallel_for(queries.size(), [&](std::size_t qi) {
        const Eigen::Index i = queries[qi];
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j == i) continue;
            best = std::min(best, (points.row(j) - points.row(i)).squaredNorm());
        }
        nearest[qi] = std::sqrt(best);
    });
    double sum = 0.0;
    for (double d : nearest) sum += d;
    return sum / static_cast<double>(nearest.size());
}

}  // namespace embgeom
