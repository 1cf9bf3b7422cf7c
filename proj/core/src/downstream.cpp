#include "embgeom/downstream.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "embgeom/knn.hpp"
#include "embgeom/reduce.hpp"
#include "embgeom/rng.hpp"
#include "parallel.hpp"

namespace embgeom {

namespace {

std::uint64_t context_code(const std::array<int, 3>& ctx, const std::array<std::size_t, 3>& sizes) {
    return (static_cast<std::uint64_t>(ctx[0]) * sizes[1] + static_cast<std::uint64_t>(ctx[1])) * sizes[2] +
           static_cast<std::uint64_t>(ctx[2]);
}

// Per-class synthetic generation in ambient space. Returns the synthetic
// rows plus whether the surface path fell back to interpolation.
struct ClassSynth {
    Eigen::MatrixXd points;
    bool surface_fallback = false;
};

Eigen::MatrixXd replicate_single(const Eigen::MatrixXd& points, int count) {
    Eigen::MatrixXd out(count, points.cols());
    for (int i = 0; i < count; ++i) out.row(i) = points.row(0);
    return out;
}

Eigen::MatrixXd interpolation_like(const Eigen::MatrixXd& points, int count, std::uint64_t seed) {
    if (points.rows() < 2) return replicate_single(points, count);
    return generate_linear_interpolation(points, count, seed).points;
}

ClassSynth augment_class(const Eigen::MatrixXd& class_points, AugmentMethod method, int count,
                         const DownstreamConfig& config, std::uint64_t seed, double global_nn_scale) {
    ClassSynth out;
    switch (method) {
        case AugmentMethod::none:
            throw std::logic_error("augment_class: none method has nothing to generate");
        case AugmentMethod::linear_interpolation:
            out.points = interpolation_like(class_points, count, seed);
            return out;
        case AugmentMethod::local_perturbation: {
            if (class_points.rows() >= 2) {
                // perturb in the train-only reduced space of the class
                const ReducedSpace space = fit_pca(class_points, config.variance_threshold);
                const Eigen::MatrixXd reduced = project(space, class_points);
                const auto batch = generate_local_perturbation(reduced, count, config.sigma_scale, seed);
                out.points = reconstruct(space, batch.points);
            } else {
                // single point: no class-local scale exists, borrow the train-wide one
                out.points = replicate_single(class_points, count);
                for (int i = 0; i < count; ++i) {
                    RandomStream rng(substream_seed(seed, static_cast<std::uint64_t>(i)));
                    for (Eigen::Index j = 0; j < out.points.cols(); ++j)
                        out.points(i, j) += config.sigma_scale * global_nn_scale * rng.normal();
                }
            }
            return out;
        }
        case AugmentMethod::surface_based: {
            if (class_points.rows() < 2) {
                out.points = interpolation_like(class_points, count, seed);
                out.surface_fallback = true;
                return out;
            }
            const ReducedSpace space = fit_pca(class_points, config.variance_threshold);
            if (class_points.rows() < space.r + 2) {
                // too few points for a stable quadric in the reduced frame
                out.points = interpolation_like(class_points, count, seed);
                out.surface_fallback = true;
                return out;
            }
            const Eigen::MatrixXd reduced = project(space, class_points);
            auto [model, diag] = fit_implicit(reduced, 2);
            SurfaceGenerationConfig gen;
            gen.alpha = config.alpha;
            gen.projection = config.projection;
            gen.keep_nonconverged = true;  // batch size must stay exactly `count`
            const auto batch = generate_surface_based(reduced, model, count, gen, seed);
            out.points = reconstruct(space, batch.points);
            return out;
        }
    }
    throw std::logic_error("augment_class: bad method");
}

double sample_std(const std::vector<double>& values, double mean) {
    if (values.size() < 2) return 0.0;
    double acc = 0.0;
    for (double v : values) acc += (v - mean) * (v - mean);
    return std::sqrt(acc / static_cast<double>(values.size() - 1));
}

}  // namespace

SplitPlan make_split(const LabeledCloud& cloud, int k_shot, int n_test_contexts, std::uint64_t seed,
                     int target_slot) {
    if (target_slot < 0 || target_slot > 3) throw std::invalid_argument("make_split: target_slot must be 0..3");
    if (k_shot < 1 || n_test_contexts < 1)
        throw std::invalid_argument("make_split: k_shot and n_test_contexts must be positive");
    if (cloud.rows() < 1) throw std::invalid_argument("make_split: empty cloud");

    SplitPlan plan;
    plan.target_slot = target_slot;
    plan.k_shot = k_shot;
    plan.n_test_contexts = n_test_contexts;
    plan.seed = seed;
    {
        int at = 0;
        for (int s = 0; s < 4; ++s)
            if (s != target_slot) plan.context_slots[static_cast<std::size_t>(at++)] = s;
    }

    // sorted unique value tables make the index encoding canonical
    std::array<std::map<std::string, int>, 3> value_index;
    std::map<std::string, int> label_index;
    for (const auto& slots : cloud.slots) {
        for (int c = 0; c < 3; ++c)
            value_index[static_cast<std::size_t>(c)]
                .emplace(slots[static_cast<std::size_t>(plan.context_slots[static_cast<std::size_t>(c)])], 0);
        label_index.emplace(slots[static_cast<std::size_t>(target_slot)], 0);
    }
    for (int c = 0; c < 3; ++c) {
        int idx = 0;
        for (auto& [value, slot_idx] : value_index[static_cast<std::size_t>(c)]) {
            slot_idx = idx++;
            plan.context_values[static_cast<std::size_t>(c)].push_back(value);
        }
    }
    {
        int idx = 0;
        for (auto& [value, label_idx] : label_index) {
            label_idx = idx++;
            plan.labels.push_back(value);
        }
    }
    const std::size_t n_labels = plan.labels.size();
    if (n_labels < 2) throw std::invalid_argument("make_split: the target slot must take at least two values");

    // full factorial check: every observed context holds each label exactly once
    const std::array<std::size_t, 3> sizes{plan.context_values[0].size(), plan.context_values[1].size(),
                                           plan.context_values[2].size()};
    std::unordered_map<std::uint64_t, std::vector<int>> cells;  // context -> per-label count
    std::map<std::uint64_t, std::array<int, 3>> contexts;       // canonical (sorted) context order
    for (const auto& slots : cloud.slots) {
        std::array<int, 3> ctx{};
        for (int c = 0; c < 3; ++c)
            ctx[static_cast<std::size_t>(c)] =
                value_index[static_cast<std::size_t>(c)]
                    .at(slots[static_cast<std::size_t>(plan.context_slots[static_cast<std::size_t>(c)])]);
        const std::uint64_t code = context_code(ctx, sizes);
        auto [it, inserted] = cells.try_emplace(code);
        if (inserted) {
            it->second.assign(n_labels, 0);
            contexts.emplace(code, ctx);
        }
        const int label = label_index.at(slots[static_cast<std::size_t>(target_slot)]);
        if (++it->second[static_cast<std::size_t>(label)] > 1)
            throw std::invalid_argument("make_split: duplicate (label, context) cell");
    }
    for (const auto& [code, counts] : cells)
        for (std::size_t l = 0; l < n_labels; ++l)
            if (counts[l] != 1)
                throw std::invalid_argument("make_split: missing (label, context) cell; the cloud is not factorial");

    const std::size_t n_contexts = contexts.size();
    if (static_cast<std::size_t>(k_shot) + static_cast<std::size_t>(n_test_contexts) > n_contexts)
        throw std::invalid_argument("make_split: insufficient contexts (" + std::to_string(n_contexts) +
                                    " available, " + std::to_string(k_shot + n_test_contexts) + " requested)");

    std::vector<std::array<int, 3>> ordered;
    ordered.reserve(n_contexts);
    for (const auto& [code, ctx] : contexts) ordered.push_back(ctx);
    RandomStream rng(substream_seed(seed, 0xC7ull));
    rng.shuffle(ordered);
    plan.train_contexts.assign(ordered.begin(), ordered.begin() + k_shot);
    plan.test_contexts.assign(ordered.begin() + k_shot, ordered.begin() + k_shot + n_test_contexts);
    return plan;
}

void logreg_gradient(const Eigen::MatrixXd& features, const std::vector<int>& labels, const Eigen::MatrixXd& weights,
                     const Eigen::VectorXd& bias, double l2, Eigen::MatrixXd& grad_w, Eigen::VectorXd& grad_b) {
    const auto n = features.rows();
    Eigen::MatrixXd logits = features * weights.transpose();
    logits.rowwise() += bias.transpose();
    Eigen::MatrixXd probs = (logits.colwise() - logits.rowwise().maxCoeff()).array().exp();
    probs.array().colwise() /= probs.rowwise().sum().array();
    for (Eigen::Index i = 0; i < n; ++i) probs(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    grad_w = probs.transpose() * features / static_cast<double>(n) + l2 * weights;
    grad_b = probs.colwise().sum().transpose() / static_cast<double>(n);
}

double logreg_loss(const Eigen::MatrixXd& features, const std::vector<int>& labels, const Eigen::MatrixXd& weights,
                   const Eigen::VectorXd& bias, double l2) {
    const auto n = features.rows();
    Eigen::MatrixXd logits = features * weights.transpose();
    logits.rowwise() += bias.transpose();
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    const Eigen::VectorXd log_sum =
        (logits.colwise() - row_max).array().exp().rowwise().sum().log().matrix() + row_max;
    double loss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) loss += log_sum[i] - logits(i, labels[static_cast<std::size_t>(i)]);
    return loss / static_cast<double>(n) + 0.5 * l2 * weights.squaredNorm();
}

ClassifierModel train_logreg(const Eigen::MatrixXd& features, const std::vector<int>& labels, int n_classes,
                             const LogRegConfig& config) {
    const auto n = features.rows();
    if (n < 1 || static_cast<std::size_t>(n) != labels.size())
        throw std::invalid_argument("train_logreg: feature/label size mismatch");
    if (!features.allFinite()) throw std::invalid_argument("train_logreg: non-finite features");
    if (n_classes < 2) throw std::invalid_argument("train_logreg: at least two classes required");
    if (n < n_classes) throw std::invalid_argument("train_logreg: fewer samples than classes");
    std::unordered_set<int> present;
    for (int y : labels) {
        if (y < 0 || y >= n_classes) throw std::invalid_argument("train_logreg: label out of range");
        present.insert(y);
    }
    if (present.size() < 2) throw std::invalid_argument("train_logreg: single-class input");

    const double l2 = config.l2 < 0.0 ? 1.0 / static_cast<double>(n) : config.l2;
    ClassifierModel model;
    model.weights = Eigen::MatrixXd::Zero(n_classes, features.cols());
    model.bias = Eigen::VectorXd::Zero(n_classes);

    double step = 1.0;
    Eigen::MatrixXd grad_w;
    Eigen::VectorXd grad_b;
    double loss = logreg_loss(features, labels, model.weights, model.bias, l2);
    for (int iter = 0; iter < config.max_iter; ++iter) {
        logreg_gradient(features, labels, model.weights, model.bias, l2, grad_w, grad_b);
        const double grad_sq = grad_w.squaredNorm() + grad_b.squaredNorm();
        model.final_grad_norm = std::sqrt(grad_sq);
        if (model.final_grad_norm <= config.tol) break;

        // backtracking line search with Armijo condition
        double trial_loss;
        for (;;) {
            trial_loss = logreg_loss(features, labels, model.weights - step * grad_w, model.bias - step * grad_b, l2);
            if (trial_loss <= loss - 1e-4 * step * grad_sq || step < 1e-14) break;
            step *= 0.5;
        }
        if (step < 1e-14) break;
        model.weights -= step * grad_w;
        model.bias -= step * grad_b;
        loss = trial_loss;
        model.iterations = iter + 1;
        step = std::min(step * 2.0, 1e6);
    }
    return model;
}

std::vector<int> predict(const ClassifierModel& model, const Eigen::MatrixXd& features) {
    if (features.cols() != model.weights.cols()) throw std::invalid_argument("predict: feature dimension mismatch");
    Eigen::MatrixXd logits = features * model.weights.transpose();
    logits.rowwise() += model.bias.transpose();
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
        Eigen::Index best = 0;
        logits.row(i).maxCoeff(&best);
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

EvalMetrics evaluate_classifier(const ClassifierModel& model, const Eigen::MatrixXd& features,
                                const std::vector<int>& labels) {
    if (features.rows() < 1) throw std::invalid_argument("evaluate_classifier: empty evaluation set");
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw std::invalid_argument("evaluate_classifier: feature/label size mismatch");
    const auto n_classes = static_cast<int>(model.weights.rows());
    for (int y : labels)
        if (y < 0 || y >= n_classes)
            throw std::invalid_argument("evaluate_classifier: label outside the training label space");

    const std::vector<int> preds = predict(model, features);
    std::vector<int> tp(static_cast<std::size_t>(n_classes), 0);
    std::vector<int> fp(static_cast<std::size_t>(n_classes), 0);
    std::vector<int> fn(static_cast<std::size_t>(n_classes), 0);
    int correct = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (preds[i] == labels[i]) {
            ++correct;
            ++tp[static_cast<std::size_t>(preds[i])];
        } else {
            ++fp[static_cast<std::size_t>(preds[i])];
            ++fn[static_cast<std::size_t>(labels[i])];
        }
    }
    double f1_sum = 0.0;
    for (int c = 0; c < n_classes; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        const double denom_p = tp[ci] + fp[ci];
        const double denom_r = tp[ci] + fn[ci];
        const double precision = denom_p > 0 ? tp[ci] / denom_p : 0.0;
        const double recall = denom_r > 0 ? tp[ci] / denom_r : 0.0;
        f1_sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
    }
    EvalMetrics metrics;
    metrics.accuracy = static_cast<double>(correct) / static_cast<double>(preds.size());
    metrics.macro_f1 = f1_sum / n_classes;
    return metrics;
}

std::string to_string(AugmentMethod m) {
    switch (m) {
        case AugmentMethod::none: return "none";
        case AugmentMethod::linear_interpolation: return "linear_interpolation";
        case AugmentMethod::local_perturbation: return "local_perturbation";
        case AugmentMethod::surface_based: return "surface_based";
    }
    throw std::invalid_argument("bad augment method");
}

AugmentMethod augment_method_from_string(const std::string& s) {
    if (s == "none") return AugmentMethod::none;
    if (s == "linear_interpolation") return AugmentMethod::linear_interpolation;
    if (s == "local_perturbation") return AugmentMethod::local_perturbation;
    if (s == "surface_based") return AugmentMethod::surface_based;
    throw std::invalid_argument("unknown augment method '" + s + "'");
}

SingleRunResult run_single(const LabeledCloud& cloud, const SplitPlan& plan, AugmentMethod method,
                           const DownstreamConfig& config) {
    const std::array<std::size_t, 3> sizes{plan.context_values[0].size(), plan.context_values[1].size(),
                                           plan.context_values[2].size()};
    std::unordered_set<std::uint64_t> train_set, test_set;
    for (const auto& ctx : plan.train_contexts) train_set.insert(context_code(ctx, sizes));
    for (const auto& ctx : plan.test_contexts) test_set.insert(context_code(ctx, sizes));
    for (std::uint64_t code : train_set)
        if (test_set.count(code)) throw LeakageError("run_single: train and test contexts overlap");

    std::array<std::unordered_map<std::string, int>, 3> value_index;
    for (int c = 0; c < 3; ++c)
        for (std::size_t i = 0; i < plan.context_values[static_cast<std::size_t>(c)].size(); ++i)
            value_index[static_cast<std::size_t>(c)]
                .emplace(plan.context_values[static_cast<std::size_t>(c)][i], static_cast<int>(i));
    std::unordered_map<std::string, int> label_index;
    for (std::size_t i = 0; i < plan.labels.size(); ++i) label_index.emplace(plan.labels[i], static_cast<int>(i));
    const auto n_labels = static_cast<int>(plan.labels.size());

    std::vector<Eigen::Index> train_rows, test_rows;
    std::vector<int> train_labels, test_labels;
    std::unordered_set<std::string> train_ids, test_ids;
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        const auto& slots = cloud.slots[static_cast<std::size_t>(i)];
        std::array<int, 3> ctx{};
        for (int c = 0; c < 3; ++c) {
            const auto it = value_index[static_cast<std::size_t>(c)].find(
                slots[static_cast<std::size_t>(plan.context_slots[static_cast<std::size_t>(c)])]);
            if (it == value_index[static_cast<std::size_t>(c)].end())
                throw std::invalid_argument("run_single: row context outside the plan's value tables");
            ctx[static_cast<std::size_t>(c)] = it->second;
        }
        const auto lit = label_index.find(slots[static_cast<std::size_t>(plan.target_slot)]);
        if (lit == label_index.end())
            throw std::invalid_argument("run_single: row label outside the plan's label table");
        const std::uint64_t code = context_code(ctx, sizes);
        if (train_set.count(code)) {
            train_rows.push_back(i);
            train_labels.push_back(lit->second);
            train_ids.insert(cloud.ids[static_cast<std::size_t>(i)]);
        } else if (test_set.count(code)) {
            test_rows.push_back(i);
            test_labels.push_back(lit->second);
            test_ids.insert(cloud.ids[static_cast<std::size_t>(i)]);
        }
    }
    for (const auto& id : train_ids)
        if (test_ids.count(id)) throw LeakageError("run_single: row id '" + id + "' reached both sides of the split");
    if (train_rows.size() != static_cast<std::size_t>(plan.k_shot) * static_cast<std::size_t>(n_labels))
        throw std::invalid_argument("run_single: train size is not k_shot x labels");
    if (test_rows.size() != static_cast<std::size_t>(plan.n_test_contexts) * static_cast<std::size_t>(n_labels))
        throw std::invalid_argument("run_single: test size is not n_test_contexts x labels");

    const auto d = cloud.dim();
    Eigen::MatrixXd train_features(static_cast<Eigen::Index>(train_rows.size()), d);
    for (std::size_t i = 0; i < train_rows.size(); ++i)
        train_features.row(static_cast<Eigen::Index>(i)) = cloud.points.row(train_rows[i]);
    Eigen::MatrixXd test_features(static_cast<Eigen::Index>(test_rows.size()), d);
    for (std::size_t i = 0; i < test_rows.size(); ++i)
        test_features.row(static_cast<Eigen::Index>(i)) = cloud.points.row(test_rows[i]);

    SingleRunResult result;
    result.n_train_real = static_cast<int>(train_rows.size());
    result.n_test = static_cast<int>(test_rows.size());

    Eigen::MatrixXd features = train_features;
    std::vector<int> labels = train_labels;
    if (method != AugmentMethod::none) {
        // synthetic-to-real ratio 1:1, generated per class from train rows only
        const double global_scale = train_features.rows() >= 2 ? mean_nn_distance(train_features) : 0.0;
        std::vector<Eigen::MatrixXd> synth(static_cast<std::size_t>(n_labels));
        int fallbacks = 0;
        for (int c = 0; c < n_labels; ++c) {
            std::vector<Eigen::Index> class_rows;
            for (std::size_t i = 0; i < train_labels.size(); ++i)
                if (train_labels[i] == c) class_rows.push_back(static_cast<Eigen::Index>(i));
            Eigen::MatrixXd class_points(static_cast<Eigen::Index>(class_rows.size()), d);
            for (std::size_t i = 0; i < class_rows.size(); ++i)
                class_points.row(static_cast<Eigen::Index>(i)) = train_features.row(class_rows[i]);
            const std::uint64_t class_seed = substream_seed(plan.seed, 0x1000ull + static_cast<std::uint64_t>(c));
            auto generated = augment_class(class_points, method, plan.k_shot, config, class_seed, global_scale);
            fallbacks += generated.surface_fallback ? 1 : 0;
            synth[static_cast<std::size_t>(c)] = std::move(generated.points);
        }
        result.fallback_classes = fallbacks;

        Eigen::Index total_synth = 0;
        for (const auto& s : synth) total_synth += s.rows();
        Eigen::MatrixXd all(train_features.rows() + total_synth, d);
        all.topRows(train_features.rows()) = train_features;
        Eigen::Index at = train_features.rows();
        for (int c = 0; c < n_labels; ++c) {
            const auto& s = synth[static_cast<std::size_t>(c)];
            all.middleRows(at, s.rows()) = s;
            for (Eigen::Index i = 0; i < s.rows(); ++i) labels.push_back(c);
            at += s.rows();
        }
        features = std::move(all);
        result.n_train_synthetic = static_cast<int>(total_synth);
    }

    const ClassifierModel model = train_logreg(features, labels, n_labels, config.logreg);
    const EvalMetrics metrics = evaluate_classifier(model, test_features, test_labels);
    result.accuracy = metrics.accuracy;
    result.macro_f1 = metrics.macro_f1;
    return result;
}

std::vector<RunResult> run_experiment(const LabeledCloud& cloud, const std::vector<int>& k_shots,
                                      const std::vector<AugmentMethod>& methods, const DownstreamConfig& config,
                                      std::uint64_t seed) {
    if (k_shots.empty() || methods.empty())
        throw std::invalid_argument("run_experiment: k_shots and methods must be nonempty");
    if (config.n_runs < 1) throw std::invalid_argument("run_experiment: n_runs must be positive");

    struct Task {
        std::size_t k_index;
        int run;
    };
    std::vector<Task> tasks;
    for (std::size_t ki = 0; ki < k_shots.size(); ++ki)
        for (int run = 0; run < config.n_runs; ++run) tasks.push_back({ki, run});

    // results[k][method][run]; runs are independent, so the pool size cannot
    // change any value
    std::vector<std::vector<std::vector<SingleRunResult>>> grid(
        k_shots.size(), std::vector<std::vector<SingleRunResult>>(
                            methods.size(), std::vector<SingleRunResult>(static_cast<std::size_t>(config.n_runs))));
    detail::parallel_for(
        tasks.size(),
        [&](std::size_t t) {
            const auto [ki, run] = tasks[t];
            const std::uint64_t run_seed =
                substream_seed(substream_seed(seed, static_cast<std::uint64_t>(k_shots[ki])),
                               static_cast<std::uint64_t>(run));
            const SplitPlan plan =
                make_split(cloud, k_shots[ki], config.n_test_contexts, run_seed, config.target_slot);
            for (std::size_t mi = 0; mi < methods.size(); ++mi)
                grid[ki][mi][static_cast<std::size_t>(run)] = run_single(cloud, plan, methods[mi], config);
        },
        config.threads);

    std::vector<RunResult> results;
    results.reserve(k_shots.size() * methods.size());
    for (std::size_t ki = 0; ki < k_shots.size(); ++ki) {
        for (std::size_t mi = 0; mi < methods.size(); ++mi) {
            RunResult agg;
            agg.k_shot = k_shots[ki];
            agg.method = methods[mi];
            agg.runs = grid[ki][mi];
            std::vector<double> accs, f1s;
            for (const auto& r : agg.runs) {
                accs.push_back(r.accuracy);
                f1s.push_back(r.macro_f1);
            }
            for (double a : accs) agg.accuracy_mean += a;
            for (double f : f1s) agg.f1_mean += f;
            agg.accuracy_mean /= static_cast<double>(accs.size());
            agg.f1_mean /= static_cast<double>(f1s.size());
            agg.accuracy_std = sample_std(accs, agg.accuracy_mean);
            agg.f1_std = sample_std(f1s, agg.f1_mean);
            results.push_back(std::move(agg));
        }
    }
    return results;
}

std::vector<AblationRow> ablation_report(const std::vector<RunResult>& results, int k_shot) {
    std::vector<const RunResult*> at_k;
    const RunResult* baseline = nullptr;
    for (const auto& r : results) {
        if (r.k_shot != k_shot) continue;
        at_k.push_back(&r);
        if (r.method == AugmentMethod::none) baseline = &r;
    }
    if (at_k.empty()) throw std::invalid_argument("ablation_report: no results at the requested k");
    if (!baseline) throw std::invalid_argument("ablation_report: requires the no-synthetic baseline");
    std::sort(at_k.begin(), at_k.end(),
              [](const RunResult* a, const RunResult* b) { return static_cast<int>(a->method) < static_cast<int>(b->method); });

    const std::size_t n_runs = baseline->runs.size();
    for (const auto* r : at_k)
        if (r->runs.size() != n_runs)
            throw std::invalid_argument("ablation_report: methods have differing run counts");

    std::vector<AblationRow> rows;
    rows.reserve(at_k.size());
    for (const auto* r : at_k) {
        AblationRow row;
        row.method = r->method;
        row.delta_accuracy = r->accuracy_mean - baseline->accuracy_mean;
        row.delta_macro_f1 = r->f1_mean - baseline->f1_mean;
        row.n_runs = static_cast<int>(n_runs);
        rows.push_back(row);
    }
    // per-run winners; ties go to the earliest method in enum order
    for (std::size_t run = 0; run < n_runs; ++run) {
        std::size_t best_acc = 0, best_f1 = 0;
        for (std::size_t m = 1; m < at_k.size(); ++m) {
            if (at_k[m]->runs[run].accuracy > at_k[best_acc]->runs[run].accuracy) best_acc = m;
            if (at_k[m]->runs[run].macro_f1 > at_k[best_f1]->runs[run].macro_f1) best_f1 = m;
        }
        ++rows[best_acc].best_acc_count;
        ++rows[best_f1].best_f1_count;
    }
    return rows;
}

}  // namespace embgeom
