#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "embgeom/cloud.hpp"
#include "embgeom/probe.hpp"

namespace embgeom {

/// Thrown when a test-side row or context reaches any train-side computation.
struct LeakageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Context-held-out split. Contexts are the value combinations of the three
/// non-target slots, encoded as index triples into the per-slot sorted value
/// tables below.
struct SplitPlan {
    int target_slot = 3;
    std::array<int, 3> context_slots{};                       // ascending slot positions
    std::array<std::vector<std::string>, 3> context_values;   // sorted unique values per context slot
    std::vector<std::string> labels;                          // sorted unique target-slot values
    std::vector<std::array<int, 3>> train_contexts;
    std::vector<std::array<int, 3>> test_contexts;
    int k_shot = 0;
    int n_test_contexts = 0;
    std::uint64_t seed = 0;
};

/// Samples k_shot + n_test_contexts disjoint contexts without replacement.
/// Verifies the full factorial structure: every observed context carries every
/// label exactly once.
SplitPlan make_split(const LabeledCloud& cloud, int k_shot, int n_test_contexts, std::uint64_t seed,
                     int target_slot = 3);

struct LogRegConfig {
    double l2 = -1.0;  // < 0 selects 1.0 / n_train
    int max_iter = 500;
    double tol = 1e-6;  // gradient Frobenius norm
};

struct ClassifierModel {
    Eigen::MatrixXd weights;  // classes x features
    Eigen::VectorXd bias;
    int iterations = 0;
    double final_grad_norm = 0.0;
};

/// Multinomial logistic regression trained by full-batch gradient descent
/// with backtracking line search. Deterministic given the inputs.
ClassifierModel train_logreg(const Eigen::MatrixXd& features, const std::vector<int>& labels, int n_classes,
                             const LogRegConfig& config = {});

/// Analytic gradient of the regularized objective at (weights, bias); exposed
/// for derivative checking.
void logreg_gradient(const Eigen::MatrixXd& features, const std::vector<int>& labels, const Eigen::MatrixXd& weights,
                     const Eigen::VectorXd& bias, double l2, Eigen::MatrixXd& grad_w, Eigen::VectorXd& grad_b);
double logreg_loss(const Eigen::MatrixXd& features, const std::vector<int>& labels, const Eigen::MatrixXd& weights,
                   const Eigen::VectorXd& bias, double l2);

std::vector<int> predict(const ClassifierModel& model, const Eigen::MatrixXd& features);

struct EvalMetrics {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
};

/// Accuracy and unweighted mean of per-class F1 over the model's classes.
/// A class with no predictions and no true instances contributes zero.
EvalMetrics evaluate_classifier(const ClassifierModel& model, const Eigen::MatrixXd& features,
                                const std::vector<int>& labels);

enum class AugmentMethod { none, linear_interpolation, local_perturbation, surface_based };

std::string to_string(AugmentMethod m);
AugmentMethod augment_method_from_string(const std::string& s);

struct DownstreamConfig {
    int n_test_contexts = 300;
    int n_runs = 10;
    int target_slot = 3;
    double variance_threshold = 0.9;  // train-only per-class PCA
    double alpha = 1.0;
    double sigma_scale = 0.5;
    ProjectionSettings projection;
    LogRegConfig logreg;
    unsigned threads = 0;  // 0 = hardware concurrency; runs are independent
};

struct SingleRunResult {
    double accuracy = 0.0;
    double macro_f1 = 0.0;
    int n_train_real = 0;
    int n_train_synthetic = 0;
    int n_test = 0;
    int fallback_classes = 0;  // classes where the surface fit fell back to interpolation
};

/// One split, one method: builds the train set (real + per-class synthetic),
/// trains the classifier and evaluates on the held-out contexts. Throws
/// LeakageError if the plan's train and test contexts intersect or a row
/// would land on both sides.
SingleRunResult run_single(const LabeledCloud& cloud, const SplitPlan& plan, AugmentMethod method,
                           const DownstreamConfig& config);

struct RunResult {
    int k_shot = 0;
    AugmentMethod method = AugmentMethod::none;
    double accuracy_mean = 0.0;
    double accuracy_std = 0.0;
    double f1_mean = 0.0;
    double f1_std = 0.0;
    std::vector<SingleRunResult> runs;
};

/// The full protocol: per k-shot value, n_runs independent splits shared by
/// every method, aggregated as mean +/- sample standard deviation.
std::vector<RunResult> run_experiment(const LabeledCloud& cloud, const std::vector<int>& k_shots,
                                      const std::vector<AugmentMethod>& methods, const DownstreamConfig& config,
                                      std::uint64_t seed);

struct AblationRow {
    AugmentMethod method = AugmentMethod::none;
    double delta_accuracy = 0.0;
    double delta_macro_f1 = 0.0;
    int best_acc_count = 0;
    int best_f1_count = 0;
    int n_runs = 0;
};

/// Per-method deltas against the no-synthetic baseline at one k, plus the
/// number of runs each method won (ties go to the earliest method in enum
/// order). Requires AugmentMethod::none among the results.
std::vector<AblationRow> ablation_report(const std::vector<RunResult>& results, int k_shot);

}  // namespace embgeom
