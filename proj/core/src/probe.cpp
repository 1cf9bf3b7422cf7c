#include "embgeom/probe.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "embgeom/knn.hpp"
#include "embgeom/rng.hpp"

namespace embgeom {

namespace {

double rms_radius(const Eigen::MatrixXd& points) {
    const Eigen::RowVectorXd centroid = points.colwise().mean();
    return std::sqrt((points.rowwise() - centroid).squaredNorm() / static_cast<double>(points.rows()));
}

// Plain Lloyd k-means with seeded k-means++ style init. Deterministic.
std::vector<int> kmeans_assign(const Eigen::MatrixXd& points, int k, std::uint64_t seed) {
    const auto n = static_cast<int>(points.rows());
    k = std::min(k, n);
    RandomStream rng(seed);
    std::vector<int> center_rows;
    center_rows.push_back(static_cast<int>(rng.index(n)));
    Eigen::VectorXd dist2 = (points.rowwise() - points.row(center_rows[0])).rowwise().squaredNorm();
    while (static_cast<int>(center_rows.size()) < k) {
        const double total = dist2.sum();
        int pick;
        if (total <= 0.0) {
            pick = static_cast<int>(rng.index(n));
        } else {
            double target = rng.uniform() * total;
            pick = n - 1;
            for (int i = 0; i < n; ++i) {
                target -= dist2[i];
                if (target <= 0.0) {
                    pick = i;
                    break;
                }
            }
        }
        center_rows.push_back(pick);
        dist2 = dist2.cwiseMin((points.rowwise() - points.row(pick)).rowwise().squaredNorm());
    }

    Eigen::MatrixXd centers(k, points.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = points.row(center_rows[c]);
    std::vector<int> assign(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (int i = 0; i < n; ++i) {
            int best = 0;
            double best_d = (points.row(i) - centers.row(0)).squaredNorm();
            for (int c = 1; c < k; ++c) {
                const double d = (points.row(i) - centers.row(c)).squaredNorm();
                if (d < best_d) {
                    best_d = d;
                    best = c;
                }
            }
            if (assign[i] != best) {
                assign[i] = best;
                changed = true;
            }
        }
        if (!changed && iter > 0) break;
        Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
        std::vector<int> counts(k, 0);
        for (int i = 0; i < n; ++i) {
            sums.row(assign[i]) += points.row(i);
            ++counts[assign[i]];
        }
        for (int c = 0; c < k; ++c)
            if (counts[c] > 0) centers.row(c) = sums.row(c) / counts[c];
    }
    return assign;
}

Eigen::VectorXd barycentric_point(const Eigen::MatrixXd& points, const std::vector<int>& members, double alpha,
                                  RandomStream& rng) {
    std::vector<double> weights(members.size());
    rng.dirichlet(alpha, weights);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(points.cols());
    for (std::size_t m = 0; m < members.size(); ++m) v += weights[m] * points.row(members[m]).transpose();
    return v;
}

}  // namespace

void ProjectionSettings::validate() const {
    if (!(f_tol > 0.0) || !(grad_tol > 0.0) || !(epsilon > 0.0) || !(max_step > 0.0) || max_iter < 1)
        throw std::invalid_argument("ProjectionSettings: all tolerances must be positive and max_iter >= 1");
}

ProjectionResult project_to_surface(const ImplicitPolyModel& model, Eigen::VectorXd z0,
                                    const ProjectionSettings& settings) {
    settings.validate();
    if (z0.size() != model.basis.vars) throw std::invalid_argument("project_to_surface: dimension mismatch");

    ProjectionResult result;
    result.z = std::move(z0);
    for (int k = 0;; ++k) {
        if (!result.z.allFinite()) {
            result.stop = StopReason::non_finite;
            result.normalized_residual = std::numeric_limits<double>::infinity();
            break;
        }
        const double f = evaluate(model, result.z);
        const Eigen::VectorXd grad = gradient(model, result.z);
        const double grad_norm = grad.norm();
        if (!std::isfinite(f) || !grad.allFinite()) {
            result.stop = StopReason::non_finite;
            result.normalized_residual = std::numeric_limits<double>::infinity();
            break;
        }
        result.normalized_residual = std::abs(f) / (grad_norm + settings.epsilon);
        if (std::abs(f) < settings.f_tol) {
            result.stop = StopReason::residual;
            result.converged = true;
            break;
        }
        if (grad_norm < settings.grad_tol) {
            result.stop = StopReason::small_gradient;
            break;
        }
        if (k >= settings.max_iter) {
            result.stop = StopReason::iteration_cap;
            break;
        }
        Eigen::VectorXd step = -(f / (grad_norm * grad_norm + settings.epsilon)) * grad;
        const double step_norm = step.norm();
        if (step_norm > settings.max_step) step *= settings.max_step / step_norm;
        result.max_step_norm = std::max(result.max_step_norm, std::min(step_norm, settings.max_step));
        result.z += step;
        result.iterations = k + 1;
    }
    return result;
}

Eigen::MatrixXd sample_barycentric(const Eigen::MatrixXd& points, double alpha, int count, std::uint64_t seed) {
    if (points.rows() < 1) throw std::invalid_argument("sample_barycentric: empty cloud");
    if (!(alpha > 0.0)) throw std::invalid_argument("sample_barycentric: alpha must be positive");
    if (count < 1) throw std::invalid_argument("sample_barycentric: count must be positive");

    std::vector<int> all(static_cast<std::size_t>(points.rows()));
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    Eigen::MatrixXd out(count, points.cols());
    for (int i = 0; i < count; ++i) {
        RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        out.row(i) = barycentric_point(points, all, alpha, rng).transpose();
    }
    return out;
}

std::string to_string(GenerationMethod m) {
    switch (m) {
        case GenerationMethod::surface_based: return "surface_based";
        case GenerationMethod::linear_interpolation: return "linear_interpolation";
        case GenerationMethod::local_perturbation: return "local_perturbation";
    }
    throw std::invalid_argument("bad generation method");
}

GenerationMethod generation_method_from_string(const std::string& s) {
    if (s == "surface_based") return GenerationMethod::surface_based;
    if (s == "linear_interpolation") return GenerationMethod::linear_interpolation;
    if (s == "local_perturbation") return GenerationMethod::local_perturbation;
    throw std::invalid_argument("unknown generation method '" + s + "'");
}

double SyntheticBatch::convergence_fraction() const {
    if (diagnostics.empty()) return 0.0;
    std::size_t conv = 0;
    for (const auto& d : diagnostics) conv += d.converged ? 1 : 0;
    return static_cast<double>(conv) / static_cast<double>(diagnostics.size());
}

double SyntheticBatch::mean_residual() const {
    if (diagnostics.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& d : diagnostics) sum += d.residual;
    return sum / static_cast<double>(diagnostics.size());
}

SyntheticBatch generate_surface_based(const Eigen::MatrixXd& reduced, const ImplicitPolyModel& model, int count,
                                      const SurfaceGenerationConfig& config, std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("generate_surface_based: count must be positive");
    if (reduced.rows() < 1) throw std::invalid_argument("generate_surface_based: empty cloud");
    if (reduced.cols() != model.basis.vars)
        throw std::invalid_argument("generate_surface_based: cloud dimension does not match the model");
    if (config.max_attempts < 1) throw std::invalid_argument("generate_surface_based: max_attempts must be >= 1");

    ProjectionSettings settings = config.projection;
    if (std::isinf(settings.max_step)) {
        const double radius = rms_radius(reduced);
        settings.max_step = radius > 0.0 ? 0.5 * radius : 1.0;
    }
    settings.validate();

    const auto n = static_cast<int>(reduced.rows());
    std::vector<int> all(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;

    std::vector<int> cluster_of;
    std::vector<std::vector<int>> cluster_members;
    if (config.subclusters > 1 && n > 1) {
        cluster_of = kmeans_assign(reduced, config.subclusters, substream_seed(seed, 0x6B6Dull));
        cluster_members.resize(static_cast<std::size_t>(*std::max_element(cluster_of.begin(), cluster_of.end())) + 1);
        for (int i = 0; i < n; ++i) cluster_members[static_cast<std::size_t>(cluster_of[i])].push_back(i);
    }

    SyntheticBatch batch;
    batch.method = GenerationMethod::surface_based;
    batch.seed = seed;
    batch.requested = count;
    std::vector<Eigen::VectorXd> rows;
    rows.reserve(static_cast<std::size_t>(count));

    for (int i = 0; i < count; ++i) {
        RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        ProjectionResult last;
        bool accepted = false;
        for (int attempt = 0; attempt < config.max_attempts && !accepted; ++attempt) {
            const std::vector<int>* members = &all;
            if (!cluster_members.empty()) {
                const int base = static_cast<int>(rng.index(n));
                members = &cluster_members[static_cast<std::size_t>(cluster_of[base])];
            }
            Eigen::VectorXd v = barycentric_point(reduced, *members, config.alpha, rng);
            last = project_to_surface(model, std::move(v), settings);
            accepted = last.converged;
        }
        if (accepted || config.keep_nonconverged) {
            rows.push_back(last.z);
            batch.diagnostics.push_back({last.normalized_residual, last.iterations, last.converged, false});
        } else {
            ++batch.rejected;
        }
    }
    if (rows.empty()) throw std::runtime_error("generate_surface_based: no candidate converged");
    batch.points.resize(static_cast<Eigen::Index>(rows.size()), reduced.cols());
    for (std::size_t i = 0; i < rows.size(); ++i) batch.points.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
    return batch;
}

SyntheticBatch generate_linear_interpolation(const Eigen::MatrixXd& reduced, int count, std::uint64_t seed,
                                             std::optional<double> forced_t) {
    if (count < 1) throw std::invalid_argument("generate_linear_interpolation: count must be positive");
    if (reduced.rows() < 2) throw std::invalid_argument("generate_linear_interpolation: at least two points required");

    const auto n = static_cast<std::size_t>(reduced.rows());
    SyntheticBatch batch;
    batch.method = GenerationMethod::linear_interpolation;
    batch.seed = seed;
    batch.requested = count;
    batch.points.resize(count, reduced.cols());
    batch.diagnostics.assign(static_cast<std::size_t>(count), PointDiagnostics{});
    for (int i = 0; i < count; ++i) {
        RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        const std::size_t a = rng.index(n);
        std::size_t b = rng.index(n - 1);
        if (b >= a) ++b;
        const double t = forced_t ? *forced_t : rng.uniform();
        batch.points.row(i) = (1.0 - t) * reduced.row(static_cast<Eigen::Index>(a)) +
                              t * reduced.row(static_cast<Eigen::Index>(b));
    }
    return batch;
}

SyntheticBatch generate_local_perturbation(const Eigen::MatrixXd& reduced, int count, double sigma_scale,
                                           std::uint64_t seed) {
    if (count < 1) throw std::invalid_argument("generate_local_perturbation: count must be positive");
    if (reduced.rows() < 2) throw std::invalid_argument("generate_local_perturbation: at least two points required");
    if (sigma_scale < 0.0) throw std::invalid_argument("generate_local_perturbation: sigma_scale must be >= 0");

    const double scale = mean_nn_distance(reduced);
    if (!(scale > 0.0))
        throw std::invalid_argument("generate_local_perturbation: degenerate cloud (zero nearest-neighbour scale)");
    const double sigma = sigma_scale * scale;

    const auto n = static_cast<std::size_t>(reduced.rows());
    SyntheticBatch batch;
    batch.method = GenerationMethod::local_perturbation;
    batch.seed = seed;
    batch.requested = count;
    batch.points.resize(count, reduced.cols());
    batch.diagnostics.assign(static_cast<std::size_t>(count), PointDiagnostics{});
    for (int i = 0; i < count; ++i) {
        RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
        const std::size_t base = rng.index(n);
        Eigen::VectorXd noise(reduced.cols());
        for (Eigen::Index j = 0; j < noise.size(); ++j) noise[j] = sigma * rng.normal();
        batch.points.row(i) = reduced.row(static_cast<Eigen::Index>(base)) + noise.transpose();
    }
    return batch;
}

EmbeddingCloud reconstruct_batch(const ReducedSpace& space, const SyntheticBatch& batch) {
    if (batch.points.rows() < 1) throw std::invalid_argument("reconstruct_batch: empty batch");
    EmbeddingCloud cloud;
    cloud.points = reconstruct(space, batch.points);
    cloud.ids.reserve(static_cast<std::size_t>(batch.points.rows()));
    for (Eigen::Index i = 0; i < batch.points.rows(); ++i) cloud.ids.push_back("synth-" + std::to_string(i));
    cloud.source = "synthetic:" + to_string(batch.method) + ":seed=" + std::to_string(batch.seed);
    return cloud;
}

}  // namespace embgeom
