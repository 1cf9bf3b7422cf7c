#include "embgeom/reduce.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <stdexcept>

namespace embgeom {

namespace {

// Flip each column so its entry of largest absolute value is positive.
void canonicalize_signs(Eigen::MatrixXd& components) {
    for (Eigen::Index c = 0; c < components.cols(); ++c) {
        Eigen::Index at = 0;
        components.col(c).cwiseAbs().maxCoeff(&at);
        if (components(at, c) < 0.0) components.col(c) = -components.col(c);
    }
}

}  // namespace

ReducedSpace fit_pca(const Eigen::MatrixXd& points, double variance_threshold) {
    if (!(variance_threshold > 0.0) || variance_threshold > 1.0)
        throw std::invalid_argument("fit_pca: variance_threshold must lie in (0, 1]");
    const Eigen::Index n = points.rows();
    const Eigen::Index d = points.cols();
    if (n < 2) throw std::invalid_argument("fit_pca: at least two points required");
    if (!points.allFinite()) throw std::invalid_argument("fit_pca: non-finite input");

    ReducedSpace space;
    space.mean = points.colwise().mean();
    Eigen::MatrixXd centered = points.rowwise() - space.mean.transpose();
    const double total_variance = centered.squaredNorm() / static_cast<double>(n - 1);
    if (!(total_variance > 0.0)) throw std::invalid_argument("fit_pca: all points identical (zero variance)");

    const Eigen::Index max_rank = std::min<Eigen::Index>(n - 1, d);
    Eigen::VectorXd eigenvalues;   // descending
    Eigen::MatrixXd directions;    // d x max_rank

    if (d <= n) {
        // covariance route: d x d eigenproblem
        Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
        if (eig.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
        eigenvalues.resize(max_rank);
        directions.resize(d, max_rank);
        for (Eigen::Index k = 0; k < max_rank; ++k) {
            eigenvalues(k) = std::max(0.0, eig.eigenvalues()(d - 1 - k));
            directions.col(k) = eig.eigenvectors().col(d - 1 - k);
        }
    } else {
        // Gram route for N < d: n x n eigenproblem, directions recovered
        // as X^T u / ||X^T u||
        Eigen::MatrixXd gram = centered * centered.transpose() / static_cast<double>(n - 1);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
        if (eig.info() != Eigen::Success) throw std::runtime_error("fit_pca: eigendecomposition failed");
        eigenvalues.resize(max_rank);
        directions.resize(d, max_rank);
        for (Eigen::Index k = 0; k < max_rank; ++k) {
            eigenvalues(k) = std::max(0.0, eig.eigenvalues()(n - 1 - k));
            Eigen::VectorXd v = centered.transpose() * eig.eigenvectors().col(n - 1 - k);
            const double norm = v.norm();
            directions.col(k) = norm > 0.0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Zero(d);
        }
    }

    space.spectrum.resize(static_cast<std::size_t>(max_rank));
    for (Eigen::Index k = 0; k < max_rank; ++k)
        space.spectrum[static_cast<std::size_t>(k)] = eigenvalues(k) / total_variance;

    // components below 1e-12 of the top eigenvalue are numerically rank
    // deficient and never selected
    const double floor = 1e-12 * eigenvalues(0);
    Eigen::Index selectable = 0;
    while (selectable < max_rank && eigenvalues(selectable) > floor) ++selectable;
    if (selectable == 0) throw std::invalid_argument("fit_pca: degenerate spectrum");

    Eigen::Index r = selectable;
    double cumulative = 0.0;
    for (Eigen::Index k = 0; k < selectable; ++k) {
        cumulative += space.spectrum[static_cast<std::size_t>(k)];
        if (cumulative >= variance_threshold - 1e-12) {
            r = k + 1;
            break;
        }
    }
    double explained = 0.0;
    for (Eigen::Index k = 0; k < r; ++k) explained += space.spectrum[static_cast<std::size_t>(k)];

    space.r = static_cast<int>(r);
    space.explained = explained;
    space.components = directions.leftCols(r);
    canonicalize_signs(space.components);
    return space;
}

ReducedSpace fit_pca(const EmbeddingCloud& cloud, double variance_threshold) {
    cloud.validate();
    return fit_pca(cloud.points, variance_threshold);
}

Eigen::MatrixXd project(const ReducedSpace& space, const Eigen::MatrixXd& points) {
    if (points.cols() != space.mean.size())
        throw std::invalid_argument("project: point dimension does not match the ambient dimension");
    return (points.rowwise() - space.mean.transpose()) * space.components;
}

Eigen::MatrixXd reconstruct(const ReducedSpace& space, const Eigen::MatrixXd& reduced) {
    if (reduced.cols() != space.components.cols())
        throw std::invalid_argument("reconstruct: reduced dimension does not match r");
    return (reduced * space.components.transpose()).rowwise() + space.mean.transpose();
}

}  // namespace embgeom
