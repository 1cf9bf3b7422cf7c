#pragma once

#include <Eigen/Core>
#include <vector>

#include "embgeom/cloud.hpp"

namespace embgeom {

/// Affine PCA frame of a local cloud. Columns of `components` are orthonormal
/// principal directions; `r` is the smallest dimension whose cumulative
/// explained-variance fraction reaches the fitting threshold.
struct ReducedSpace {
    Eigen::VectorXd mean;        // ambient mean, length d
    Eigen::MatrixXd components;  // d x r, orthonormal columns
    int r = 0;
    double explained = 0.0;        // cumulative variance fraction at r
    std::vector<double> spectrum;  // variance fraction per component, descending
};

/// Fits the adaptive PCA frame. The sign of each component is fixed so that
/// its entry of largest absolute value is positive, making the result
/// deterministic across runs. Components with variance below 1e-12 of the top
/// eigenvalue are not selectable.
ReducedSpace fit_pca(const Eigen::MatrixXd& points, double variance_threshold);
ReducedSpace fit_pca(const EmbeddingCloud& cloud, double variance_threshold);

/// Rows of the result are U_r^T (x - mean).
Eigen::MatrixXd project(const ReducedSpace& space, const Eigen::MatrixXd& points);

/// Rows of the result are mean + U_r z.
Eigen::MatrixXd reconstruct(const ReducedSpace& space, const Eigen::MatrixXd& reduced);

}  // namespace embgeom
