#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "embgeom/cloud.hpp"
#include "embgeom/reduce.hpp"
#include "embgeom/surface.hpp"

namespace embgeom {

struct ProjectionSettings {
    double f_tol = 1e-6;      // residual stop: |f(z)| < f_tol
    double grad_tol = 1e-8;   // gradient stop: ||grad f(z)|| < grad_tol
    int max_iter = 50;        // iteration stop
    double epsilon = 1e-12;   // denominator stabilizer
    double max_step = std::numeric_limits<double>::infinity();  // per-iteration step cap

    void validate() const;
};

enum class StopReason { residual, small_gradient, iteration_cap, non_finite };

struct ProjectionResult {
    Eigen::VectorXd z;
    int iterations = 0;
    double normalized_residual = 0.0;  // |f| / (||grad f|| + epsilon) at the final point
    double max_step_norm = 0.0;        // largest step actually taken
    StopReason stop = StopReason::residual;
    bool converged = false;  // true iff the residual criterion fired
};

/// Stabilized Newton-type projection onto the carrier f(z) = 0:
///   z <- z - f(z) * grad f(z) / (||grad f(z)||^2 + epsilon)
/// with the step norm clipped to max_step. Non-finite intermediates stop the
/// iteration and are reported through the stop reason, never thrown.
ProjectionResult project_to_surface(const ImplicitPolyModel& model, Eigen::VectorXd z0,
                                    const ProjectionSettings& settings);

/// `count` convex combinations of the rows of `points` with symmetric
/// Dirichlet(alpha) weights. Deterministic: sample i uses the substream
/// derived from (seed, i).
Eigen::MatrixXd sample_barycentric(const Eigen::MatrixXd& points, double alpha, int count, std::uint64_t seed);

enum class GenerationMethod { surface_based, linear_interpolation, local_perturbation };

std::string to_string(GenerationMethod m);
GenerationMethod generation_method_from_string(const std::string& s);

struct PointDiagnostics {
    double residual = 0.0;  // final normalized projection residual (surface method)
    int iterations = 0;
    bool converged = true;
    bool fallback = false;
};

struct SyntheticBatch {
    Eigen::MatrixXd points;  // M x r
    GenerationMethod method = GenerationMethod::surface_based;
    std::vector<PointDiagnostics> diagnostics;  // one entry per emitted point
    std::uint64_t seed = 0;
    int requested = 0;
    int rejected = 0;  // candidates dropped after exhausting projection attempts

    double convergence_fraction() const;
    double mean_residual() const;
};

struct SurfaceGenerationConfig {
    double alpha = 1.0;
    ProjectionSettings projection;  // max_step == inf selects 0.5 x cloud RMS radius
    int max_attempts = 10;          // reject-and-resample budget per point
    bool keep_nonconverged = false;
    int subclusters = 0;  // optional k-means pre-grouping; 0 disables
};

/// Barycentric initialization followed by Newton projection onto the fitted
/// carrier. Non-converged candidates are resampled up to max_attempts times,
/// then dropped (or kept flagged when keep_nonconverged is set).
SyntheticBatch generate_surface_based(const Eigen::MatrixXd& reduced, const ImplicitPolyModel& model, int count,
                                      const SurfaceGenerationConfig& config, std::uint64_t seed);

/// (1-t) z_a + t z_b over uniformly drawn distinct index pairs, t ~ U(0,1).
/// forced_t pins t for every sample (test hook).
SyntheticBatch generate_linear_interpolation(const Eigen::MatrixXd& reduced, int count, std::uint64_t seed,
                                             std::optional<double> forced_t = std::nullopt);

/// z_i + eta with isotropic Gaussian eta of standard deviation
/// sigma_scale x (mean nearest-neighbour distance of the cloud).
SyntheticBatch generate_local_perturbation(const Eigen::MatrixXd& reduced, int count, double sigma_scale,
                                           std::uint64_t seed);

/// Maps a batch back to ambient space through the PCA frame.
EmbeddingCloud reconstruct_batch(const ReducedSpace& space, const SyntheticBatch& batch);

}  // namespace embgeom
