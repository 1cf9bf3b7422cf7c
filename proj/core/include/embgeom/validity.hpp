#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>

#include "embgeom/surface.hpp"

namespace embgeom {

/// Mean normalized surface residual of the synthetic points, divided by a
/// characteristic length of the original cloud.
double surface_consistency(const ImplicitPolyModel& model, const Eigen::MatrixXd& synth, double scale,
                           double epsilon = 1e-12);

struct NeighborhoodResult {
    double consistency = 0.0;  // mean shared-neighbour fraction, in [0, 1]
    double deviation = 0.0;    // mean relative difference of mean k-NN distance
};

/// For each synthetic point: its k nearest originals are compared with the k
/// nearest originals of its closest original anchor, the anchor itself being
/// excluded from both neighbourhoods. Requires k < N.
NeighborhoodResult neighborhood_consistency(const Eigen::MatrixXd& orig, const Eigen::MatrixXd& synth, int k);

struct LocalDistribution {
    Eigen::VectorXd mean;
    Eigen::MatrixXd covariance;  // 1/(N-1) normalization
    double regularization = 0.0;  // ridge actually added so that Cholesky succeeds
};

LocalDistribution fit_local_distribution(const Eigen::MatrixXd& orig, double reg_scale = 1e-8);

/// Mean Mahalanobis distance of the synthetic points under the local Gaussian.
double distribution_consistency(const LocalDistribution& dist, const Eigen::MatrixXd& synth);

struct ShapeConsistencyResult {
    double frobenius_drift = 0.0;  // relative drift of ||H||_F / (||g|| + eps)
    double spectral_drift = 0.0;   // relative drift of ||H||_2 / (||g|| + eps)
    double shape_consistency = 0.0;  // (frobenius_drift + spectral_drift) / 2
    int retained = 0;                // sample points surviving the gradient floor
};

/// Hessian-based second-order drift between two carriers, averaged over the
/// sample points. Points where either gradient norm falls below grad_floor are
/// excluded; throws if none survive.
ShapeConsistencyResult shape_consistency(const ImplicitPolyModel& model_orig, const ImplicitPolyModel& model_ext,
                                         const Eigen::MatrixXd& sample_points, double epsilon = 1e-12,
                                         double grad_floor = 1e-8);

/// Sign-invariant distance between unit-normalized coefficient vectors:
/// min(||a - b||, ||a + b||). Requires the same basis shape.
double coefficient_consistency(const ImplicitPolyModel& a, const ImplicitPolyModel& b);

/// Distance from `a` to the convex hull of the rows of `points`, computed by
/// an away-step Frank-Wolfe solver on the simplex.
double hull_distance(const Eigen::MatrixXd& points, const Eigen::VectorXd& a, double tolerance = 1e-10,
                     int max_iterations = 200000);

struct AngularStabilityReport {
    double cloud_diameter = 0.0;   // max pairwise distance within the cloud
    double hull_distance = 0.0;    // dist(a, conv(Z))
    double bound = 0.0;            // 2 asin(D / (2 d)) when applicable
    double max_angle = 0.0;        // max_j angle(v - a, z_j - a)
    bool bound_applicable = false;  // d > 0 and D <= 2 d
    bool bound_satisfied = false;   // max_angle <= bound + 1e-9 (when applicable)
};

/// Checks the barycentric angular stability bound for candidate v against
/// reference a. Throws when v == a.
AngularStabilityReport angular_stability_check(const Eigen::MatrixXd& cloud, const Eigen::VectorXd& a,
                                               const Eigen::VectorXd& v);

struct ValidityOptions {
    int k = 5;                 // neighbourhood size
    double epsilon = 1e-12;    // residual / descriptor stabilizer
    int shape_samples = 256;   // L, drawn without replacement from the originals
    double grad_floor = 1e-8;
    double reg_scale = 1e-8;
    std::uint64_t seed = 0;            // shape-sample subsampling stream
    std::optional<double> scale;       // SC scale override; default mean NN distance
};

/// The six scalar metrics in report layout plus their configuration.
struct ValidityReport {
    double surface = 0.0;
    double neighborhood = 0.0;
    double neigh_dev = 0.0;
    double distr_dev = 0.0;
    double hess_shape = 0.0;
    double coeff_cons = 0.0;

    double hess_shape_frobenius = 0.0;
    double hess_shape_spectral = 0.0;
    int shape_points_retained = 0;

    int n_orig = 0;
    int n_synth = 0;
    int k = 5;
    double epsilon = 1e-12;
    int shape_samples = 0;
    double scale = 0.0;
    std::uint64_t seed = 0;
};

/// Runs the full metric suite for one batch: refits the carrier on the
/// extended cloud and fills every field of the report.
ValidityReport evaluate_batch_validity(const Eigen::MatrixXd& orig_reduced, const ImplicitPolyModel& model_orig,
                                       const Eigen::MatrixXd& synth, const ValidityOptions& options = {});

}  // namespace embgeom
