#include "embgeom/validity.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_set>

#include "embgeom/knn.hpp"
#include "embgeom/rng.hpp"
#include "parallel.hpp"

namespace embgeom {

namespace {

double spectral_norm(const Eigen::MatrixXd& symmetric) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetric, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().cwiseAbs().maxCoeff();
}

// Numerically stable angle between two nonzero vectors.
double angle_between(const Eigen::VectorXd& u, const Eigen::VectorXd& w) {
    const Eigen::VectorXd un = u.normalized();
    const Eigen::VectorXd wn = w.normalized();
    return 2.0 * std::atan2((un - wn).norm(), (un + wn).norm());
}

}  // namespace

double surface_consistency(const ImplicitPolyModel& model, const Eigen::MatrixXd& synth, double scale,
                           double epsilon) {
    if (synth.rows() < 1) throw std::invalid_argument("surface_consistency: empty batch");
    if (!(scale > 0.0)) throw std::invalid_argument("surface_consistency: scale must be positive");
    auto [res, diag] = residuals(model, synth, ResidualKind::normalized_surface, epsilon);
    double sum = 0.0;
    for (double v : res) sum += v;
    return sum / (static_cast<double>(res.size()) * scale);
}

NeighborhoodResult neighborhood_consistency(const Eigen::MatrixXd& orig, const Eigen::MatrixXd& synth, int k) {
    if (orig.rows() < 1 || synth.rows() < 1)
        throw std::invalid_argument("neighborhood_consistency: both point sets must be nonempty");
    if (orig.cols() != synth.cols()) throw std::invalid_argument("neighborhood_consistency: dimension mismatch");
    if (k < 1 || k >= orig.rows())
        throw std::invalid_argument("neighborhood_consistency: requires 1 <= k < N");

    const KnnIndex index(orig);
    const auto m = static_cast<std::size_t>(synth.rows());
    std::vector<double> overlaps(m), deviations(m);
    detail::parallel_for(m, [&](std::size_t j) {
        const Eigen::VectorXd q = synth.row(static_cast<Eigen::Index>(j)).transpose();
        const int anchor = index.nearest(q);
        const auto nn_synth = index.query(q, k, anchor);
        const auto nn_anchor = index.query(orig.row(anchor).transpose(), k, anchor);
        std::unordered_set<int> anchor_set(nn_anchor.indices.begin(), nn_anchor.indices.end());
        int shared = 0;
        for (int idx : nn_synth.indices) shared += anchor_set.count(idx) ? 1 : 0;
        overlaps[j] = static_cast<double>(shared) / static_cast<double>(k);

        double mean_synth = 0.0, mean_anchor = 0.0;
        for (double d : nn_synth.distances) mean_synth += d;
        for (double d : nn_anchor.distances) mean_anchor += d;
        mean_synth /= k;
        mean_anchor /= k;
        deviations[j] = std::abs(mean_synth - mean_anchor) / (mean_anchor + 1e-12);
    });

    NeighborhoodResult result;
    for (std::size_t j = 0; j < m; ++j) {
        result.consistency += overlaps[j];
        result.deviation += deviations[j];
    }
    result.consistency /= static_cast<double>(m);
    result.deviation /= static_cast<double>(m);
    return result;
}

namespace {

// Cholesky alone is too forgiving on rank-deficient covariances: trailing
// pivots of order machine epsilon still "succeed". Demand a usable minimum
// eigenvalue instead.
bool usable_positive_definite(const Eigen::MatrixXd& m) {
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) return false;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    return lo > 0.0 && lo > 1e-12 * std::max(hi, 1e-300);
}

}  // namespace

LocalDistribution fit_local_distribution(const Eigen::MatrixXd& orig, double reg_scale) {
    if (orig.rows() < 2) throw std::invalid_argument("fit_local_distribution: at least two points required");
    LocalDistribution dist;
    dist.mean = orig.colwise().mean();
    const Eigen::MatrixXd centered = orig.rowwise() - dist.mean.transpose();
    dist.covariance = centered.transpose() * centered / static_cast<double>(orig.rows() - 1);

    const auto r = static_cast<double>(orig.cols());
    double reg = 0.0;
    for (int attempt = 0; attempt < 12; ++attempt) {
        Eigen::MatrixXd shifted = dist.covariance;
        shifted.diagonal().array() += reg;
        if (usable_positive_definite(shifted)) {
            dist.regularization = reg;
            return dist;
        }
        const double base = reg_scale * dist.covariance.trace() / r;
        reg = reg == 0.0 ? std::max(base, 1e-300) : reg * 10.0;
    }
    throw std::runtime_error("fit_local_distribution: covariance could not be regularized to positive definite");
}

double distribution_consistency(const LocalDistribution& dist, const Eigen::MatrixXd& synth) {
    if (synth.rows() < 1) throw std::invalid_argument("distribution_consistency: empty batch");
    if (synth.cols() != dist.mean.size()) throw std::invalid_argument("distribution_consistency: dimension mismatch");
    Eigen::MatrixXd shifted = dist.covariance;
    shifted.diagonal().array() += dist.regularization;
    Eigen::LLT<Eigen::MatrixXd> llt(shifted);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("distribution_consistency: covariance is not positive definite");

    double sum = 0.0;
    for (Eigen::Index i = 0; i < synth.rows(); ++i) {
        const Eigen::VectorXd diff = synth.row(i).transpose() - dist.mean;
        const Eigen::VectorXd x = llt.matrixL().solve(diff);
        sum += x.norm();
    }
    return sum / static_cast<double>(synth.rows());
}

ShapeConsistencyResult shape_consistency(const ImplicitPolyModel& model_orig, const ImplicitPolyModel& model_ext,
                                         const Eigen::MatrixXd& sample_points, double epsilon, double grad_floor) {
    if (!model_orig.basis.same_shape(model_ext.basis))
        throw std::invalid_argument("shape_consistency: models use different bases");
    if (sample_points.rows() < 1) throw std::invalid_argument("shape_consistency: empty sample");
    if (sample_points.cols() != model_orig.basis.vars)
        throw std::invalid_argument("shape_consistency: dimension mismatch");

    ShapeConsistencyResult result;
    for (Eigen::Index i = 0; i < sample_points.rows(); ++i) {
        const Eigen::VectorXd p = sample_points.row(i).transpose();
        const double g_orig = gradient(model_orig, p).norm();
        const double g_ext = gradient(model_ext, p).norm();
        if (g_orig < grad_floor || g_ext < grad_floor) continue;  // numerically singular for this diagnostic

        const Eigen::MatrixXd h_orig = hessian(model_orig, p);
        const Eigen::MatrixXd h_ext = hessian(model_ext, p);
        const double df_orig = h_orig.norm() / (g_orig + epsilon);
        const double df_ext = h_ext.norm() / (g_ext + epsilon);
        const double d2_orig = spectral_norm(h_orig) / (g_orig + epsilon);
        const double d2_ext = spectral_norm(h_ext) / (g_ext + epsilon);

        result.frobenius_drift += std::abs(df_orig - df_ext) / (std::abs(df_orig) + epsilon);
        result.spectral_drift += std::abs(d2_orig - d2_ext) / (std::abs(d2_orig) + epsilon);
        ++result.retained;
    }
    if (result.retained == 0)
        throw std::runtime_error("shape_consistency: every sample point fell below the gradient floor");
    result.frobenius_drift /= result.retained;
    result.spectral_drift /= result.retained;
    result.shape_consistency = 0.5 * (result.frobenius_drift + result.spectral_drift);
    return result;
}

double coefficient_consistency(const ImplicitPolyModel& a, const ImplicitPolyModel& b) {
    if (!a.basis.same_shape(b.basis)) throw std::invalid_argument("coefficient_consistency: basis mismatch");
    const double na = a.theta.norm();
    const double nb = b.theta.norm();
    if (!(na > 0.0) || !(nb > 0.0)) throw std::invalid_argument("coefficient_consistency: zero coefficient vector");
    const Eigen::VectorXd ta = a.theta / na;
    const Eigen::VectorXd tb = b.theta / nb;
    return std::min((ta - tb).norm(), (ta + tb).norm());
}

double hull_distance(const Eigen::MatrixXd& points, const Eigen::VectorXd& a, double tolerance, int max_iterations) {
    if (points.rows() < 1) throw std::invalid_argument("hull_distance: empty cloud");
    if (points.cols() != a.size()) throw std::invalid_argument("hull_distance: dimension mismatch");
    const auto n = static_cast<int>(points.rows());

    // start from the nearest vertex
    int start = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        const double d = (points.row(i).transpose() - a).squaredNorm();
        if (d < best) {
            best = d;
            start = i;
        }
    }
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(n);
    lambda[start] = 1.0;
    Eigen::VectorXd x = points.row(start).transpose();

    for (int iter = 0; iter < max_iterations; ++iter) {
        const Eigen::VectorXd grad = x - a;  // half the true gradient of ||x-a||^2
        // Frank-Wolfe vertex and away vertex
        int fw = 0, away = -1;
        double fw_score = std::numeric_limits<double>::infinity();
        double away_score = -std::numeric_limits<double>::infinity();
        for (int i = 0; i < n; ++i) {
            const double s = grad.dot(points.row(i).transpose());
            if (s < fw_score) {
                fw_score = s;
                fw = i;
            }
            if (lambda[i] > 0.0 && s > away_score) {
                away_score = s;
                away = i;
            }
        }
        const double gap_fw = grad.dot(x) - fw_score;
        if (2.0 * gap_fw <= tolerance) break;

        const double gap_away = away >= 0 ? away_score - grad.dot(x) : -1.0;
        Eigen::VectorXd direction;
        double gamma_max;
        bool is_away;
        if (away < 0 || gap_fw >= gap_away) {
            direction = points.row(fw).transpose() - x;
            gamma_max = 1.0;
            is_away = false;
        } else {
            direction = x - points.row(away).transpose();
            const double la = lambda[away];
            gamma_max = la < 1.0 ? la / (1.0 - la) : std::numeric_limits<double>::infinity();
            is_away = true;
        }
        const double denom = direction.squaredNorm();
        if (denom <= 0.0) break;
        double gamma = -grad.dot(direction) / denom;
        gamma = std::clamp(gamma, 0.0, gamma_max);
        if (gamma <= 0.0) break;

        if (is_away) {
            lambda *= (1.0 + gamma);
            lambda[away] -= gamma;
            if (lambda[away] < 1e-16) lambda[away] = 0.0;
        } else {
            lambda *= (1.0 - gamma);
            lambda[fw] += gamma;
        }
        x += gamma * direction;
        if ((iter & 0x3F) == 0x3F) x = points.transpose() * lambda;  // periodic re-sync against drift
    }
    return (x - a).norm();
}

AngularStabilityReport angular_stability_check(const Eigen::MatrixXd& cloud, const Eigen::VectorXd& a,
                                               const Eigen::VectorXd& v) {
    if (cloud.rows() < 1) throw std::invalid_argument("angular_stability_check: empty cloud");
    if (cloud.cols() != a.size() || cloud.cols() != v.size())
        throw std::invalid_argument("angular_stability_check: dimension mismatch");
    if ((v - a).norm() == 0.0) throw std::invalid_argument("angular_stability_check: v must differ from a");

    AngularStabilityReport report;
    const auto n = cloud.rows();
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            report.cloud_diameter = std::max(report.cloud_diameter, (cloud.row(i) - cloud.row(j)).norm());

    report.hull_distance = hull_distance(cloud, a);

    const Eigen::VectorXd u = v - a;
    for (Eigen::Index j = 0; j < n; ++j) {
        const Eigen::VectorXd w = cloud.row(j).transpose() - a;
        if (w.norm() == 0.0) continue;  // only possible when a touches the hull
        report.max_angle = std::max(report.max_angle, angle_between(u, w));
    }

    report.bound_applicable = report.hull_distance > 1e-10 * std::max(1.0, report.cloud_diameter) &&
                              report.cloud_diameter <= 2.0 * report.hull_distance;
    if (report.bound_applicable) {
        const double ratio = std::min(1.0, report.cloud_diameter / (2.0 * report.hull_distance));
        report.bound = 2.0 * std::asin(ratio);
        report.bound_satisfied = report.max_angle <= report.bound + 1e-9;
    }
    return report;
}

ValidityReport evaluate_batch_validity(const Eigen::MatrixXd& orig_reduced, const ImplicitPolyModel& model_orig,
                                       const Eigen::MatrixXd& synth, const ValidityOptions& options) {
    if (orig_reduced.cols() != synth.cols())
        throw std::invalid_argument("evaluate_batch_validity: dimension mismatch between original and synthetic");

    ValidityReport report;
    report.n_orig = static_cast<int>(orig_reduced.rows());
    report.n_synth = static_cast<int>(synth.rows());
    report.k = options.k;
    report.epsilon = options.epsilon;
    report.seed = options.seed;

    report.scale = options.scale ? *options.scale : mean_nn_distance(orig_reduced);
    report.surface = surface_consistency(model_orig, synth, report.scale, options.epsilon);

    const auto nc = neighborhood_consistency(orig_reduced, synth, options.k);
    report.neighborhood = nc.consistency;
    report.neigh_dev = nc.deviation;

    const auto dist = fit_local_distribution(orig_reduced, options.reg_scale);
    report.distr_dev = distribution_consistency(dist, synth);

    // refit on the extended cloud for the stability diagnostics
    Eigen::MatrixXd extended(orig_reduced.rows() + synth.rows(), orig_reduced.cols());
    extended.topRows(orig_reduced.rows()) = orig_reduced;
    extended.bottomRows(synth.rows()) = synth;
    auto [model_ext, ext_diag] = fit_implicit(extended, model_orig.basis.degree);

    const int sample_count = std::min<int>(options.shape_samples, static_cast<int>(orig_reduced.rows()));
    RandomStream rng(substream_seed(options.seed, 0x5A5Aull));
    const auto picks = rng.sample_without_replacement(static_cast<std::size_t>(orig_reduced.rows()),
                                                      static_cast<std::size_t>(sample_count));
    Eigen::MatrixXd sample(sample_count, orig_reduced.cols());
    for (int i = 0; i < sample_count; ++i) sample.row(i) = orig_reduced.row(picks[static_cast<std::size_t>(i)]);
    report.shape_samples = sample_count;

    const auto shape = shape_consistency(model_orig, model_ext, sample, options.epsilon, options.grad_floor);
    report.hess_shape = shape.shape_consistency;
    report.hess_shape_frobenius = shape.frobenius_drift;
    report.hess_shape_spectral = shape.spectral_drift;
    report.shape_points_retained = shape.retained;

    report.coeff_cons = coefficient_consistency(model_orig, model_ext);
    return report;
}

}  // namespace embgeom
