#include "commands.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

#include "embgeom/cloud.hpp"
#include "embgeom/corpus.hpp"
#include "embgeom/downstream.hpp"
#include "embgeom/knn.hpp"
#include "embgeom/model_io.hpp"
#include "embgeom/probe.hpp"
#include "embgeom/reduce.hpp"
#include "embgeom/rng.hpp"
#include "embgeom/surface.hpp"
#include "embgeom/validity.hpp"

#include <json.hpp>

namespace embgeom::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string fmt_double(double v) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string iso_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

CloudFormat format_from_string(const std::string& s) {
    if (s == "binary") return CloudFormat::binary;
    if (s == "csv") return CloudFormat::csv;
    throw std::invalid_argument("unknown cloud format '" + s + "' (expected binary or csv)");
}

// Collects outputs and input fingerprints, then writes the manifest. The
// manifest's metadata block carries the timestamp and is the only
// non-deterministic part of a command's output.
class OutputWriter {
public:
    explicit OutputWriter(const std::string& out_dir) : dir_(out_dir) {
        if (out_dir.empty()) throw std::invalid_argument("--out directory is required");
        fs::create_directories(dir_);
    }

    void add_input(const std::string& label, const fs::path& path) {
        inputs_[label] = {{"path", path.string()}, {"fingerprint", fingerprint_file(path)}};
    }

    fs::path path_for(const std::string& name) const { return dir_ / name; }

    const json& inputs() const { return inputs_; }

    void note_output(const std::string& name) { outputs_.push_back(name); }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(path_for(name), std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path_for(name).string() + " for writing");
        out << j.dump(2) << '\n';
        if (!out) throw std::runtime_error("write failed: " + path_for(name).string());
        note_output(name);
    }

    void write_text(const std::string& name, const std::string& text) {
        std::ofstream out(path_for(name), std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open " + path_for(name).string() + " for writing");
        out << text;
        if (!out) throw std::runtime_error("write failed: " + path_for(name).string());
        note_output(name);
    }

    void finalize(const std::string& command, const json& config) {
        json manifest{{"schema_version", 1}, {"kind", "manifest"},   {"command", command},
                      {"config", config},   {"inputs", inputs_},    {"outputs", outputs_},
                      {"metadata", json{{"generated_at", iso_timestamp()}}}};
        std::ofstream out(path_for("manifest.json"), std::ios::trunc);
        out << manifest.dump(2) << '\n';
        if (!out) throw std::runtime_error("write failed: manifest.json");
    }

private:
    fs::path dir_;
    json inputs_ = json::object();
    std::vector<std::string> outputs_;
};

std::string source_stem(const std::string& path) { return fs::path(path).stem().string(); }

std::string degree_name(int degree) {
    switch (degree) {
        case 1: return "affine";
        case 2: return "quadric";
        case 3: return "cubic";
        default: return "degree" + std::to_string(degree);
    }
}

json residual_stats(const ImplicitPolyModel& model, const Eigen::MatrixXd& reduced) {
    const auto [alg, alg_stats] = residuals(model, reduced, ResidualKind::algebraic);
    const auto [surf, surf_stats] = residuals(model, reduced, ResidualKind::normalized_surface);
    return json{{"algebraic_rmse", alg_stats.rmse},
                {"algebraic_mae", alg_stats.mae},
                {"surface_rmse", surf_stats.rmse},
                {"surface_mae", surf_stats.mae},
                {"n", reduced.rows()}};
}

}  // namespace

int run_corpus(const CorpusOpts& opts) {
    OutputWriter writer(opts.common.out_dir);
    std::vector<Family> families;
    if (opts.family == "all")
        families = {Family::A, Family::B, Family::C};
    else
        families = {family_from_string(opts.family)};
    const RegimeSpec regime = RegimeSpec::of(regime_from_string(opts.regime));

    json counts = json::object();
    for (Family f : families) {
        const auto records = enumerate_regime(builtin_family(f), regime);
        const std::string name = "corpus_" + to_string(f) + "_" + to_string(regime.regime) + ".jsonl";
        write_corpus_jsonl(records, writer.path_for(name));
        writer.note_output(name);
        counts[to_string(f)] = records.size();
        std::cout << name << ": " << records.size() << " records\n";
    }

    json config{{"family", opts.family}, {"regime", opts.regime}, {"counts", counts}};
    writer.finalize("corpus", config);
    return 0;
}

int run_embed(const EmbedOpts& opts) {
    OutputWriter writer(opts.common.out_dir);
    std::string endpoint = opts.endpoint;
    if (endpoint.empty()) {
        const char* env = std::getenv("EMBGEOM_ENDPOINT");
        if (env) endpoint = env;
    }
    if (endpoint.empty())
        throw std::invalid_argument("no endpoint: pass --endpoint or set EMBGEOM_ENDPOINT");

    writer.add_input("corpus", opts.corpus_path);
    const auto records = read_corpus_jsonl(opts.corpus_path);
    if (records.empty()) throw std::invalid_argument("corpus file is empty: " + opts.corpus_path);
    std::vector<std::string> sentences;
    sentences.reserve(records.size());
    for (const auto& rec : records) sentences.push_back(rec.sentence);

    EmbedServiceConfig config;
    config.endpoint = endpoint;
    config.batch_size = opts.batch_size;
    config.timeout_seconds = opts.timeout;
    config.max_in_flight = opts.parallel;
    EmbeddingCloud cloud = embed_via_service(sentences, config);
    for (std::size_t i = 0; i < records.size(); ++i) cloud.ids[i] = records[i].id;
    cloud.validate();
    save_embeddings(cloud, writer.path_for(opts.output_name), CloudFormat::binary);
    writer.note_output(opts.output_name);
    std::cout << opts.output_name << ": " << cloud.rows() << " x " << cloud.dim() << "\n";

    json resolved{{"endpoint", endpoint},
                  {"batch_size", opts.batch_size},
                  {"timeout", opts.timeout},
                  {"parallel", opts.parallel},
                  {"corpus", opts.corpus_path}};
    writer.finalize("embed", resolved);
    return 0;
}

int run_fit(const FitOpts& opts) {
    if (opts.embeddings.empty()) throw std::invalid_argument("fit: at least one --embeddings file is required");
    if (!opts.corpus.empty() && opts.corpus.size() != opts.embeddings.size())
        throw std::invalid_argument("fit: --corpus count must match --embeddings count");
    if (opts.holdout < 0.0 || opts.holdout >= 1.0)
        throw std::invalid_argument("fit: --holdout must lie in [0, 1)");
    const CloudFormat format = format_from_string(opts.format);

    OutputWriter writer(opts.common.out_dir);
    json rows = json::array();
    const bool multi = opts.embeddings.size() > 1;

    for (std::size_t si = 0; si < opts.embeddings.size(); ++si) {
        const std::string& path = opts.embeddings[si];
        writer.add_input("embeddings:" + source_stem(path), path);
        EmbeddingCloud cloud = load_embeddings(path, format);
        const std::string fingerprint = fingerprint_file(path);

        std::string label = source_stem(path);
        if (!opts.corpus.empty()) {
            writer.add_input("corpus:" + source_stem(opts.corpus[si]), opts.corpus[si]);
            const auto records = read_corpus_jsonl(opts.corpus[si]);
            join_corpus_embeddings(records, cloud);  // id alignment check
            bool uniform = true;
            for (const auto& rec : records)
                if (rec.family != records.front().family || rec.regime != records.front().regime) uniform = false;
            if (uniform && !records.empty())
                label = to_string(records.front().family) + "-" + to_string(records.front().regime);
        }

        const ReducedSpace space = fit_pca(cloud, opts.threshold);
        const Eigen::MatrixXd reduced = project(space, cloud.points);

        // optional validation split: refit on the fit part, score the holdout
        Eigen::MatrixXd fit_part, holdout_part;
        ReducedSpace split_space;
        if (opts.holdout > 0.0) {
            const auto n = cloud.rows();
            auto n_hold = static_cast<Eigen::Index>(std::floor(opts.holdout * static_cast<double>(n)));
            n_hold = std::max<Eigen::Index>(1, std::min(n_hold, n - 2));
            std::vector<int> order(static_cast<std::size_t>(n));
            for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = static_cast<int>(i);
            RandomStream rng(substream_seed(opts.common.seed, 0xF17ull + si));
            rng.shuffle(order);
            fit_part.resize(n - n_hold, cloud.dim());
            holdout_part.resize(n_hold, cloud.dim());
            for (Eigen::Index i = 0; i < n - n_hold; ++i) fit_part.row(i) = cloud.points.row(order[static_cast<std::size_t>(i)]);
            for (Eigen::Index i = 0; i < n_hold; ++i)
                holdout_part.row(i) = cloud.points.row(order[static_cast<std::size_t>(n - n_hold + i)]);
            split_space = fit_pca(fit_part, opts.threshold);
        }

        for (int degree : opts.degrees) {
            auto [model, diag] = fit_implicit(reduced, degree);
            json row{{"source", label},
                     {"degree", degree},
                     {"model", degree_name(degree)},
                     {"r", space.r},
                     {"explained", space.explained},
                     {"p", static_cast<std::uint64_t>(model.basis.size())},
                     {"smallest_singular_value", diag.smallest_singular_value},
                     {"degenerate", diag.degenerate}};
            row.update(residual_stats(model, reduced));

            if (opts.holdout > 0.0) {
                const Eigen::MatrixXd fit_reduced = project(split_space, fit_part);
                const Eigen::MatrixXd hold_reduced = project(split_space, holdout_part);
                auto [split_model, split_diag] = fit_implicit(fit_reduced, degree);
                json hold = residual_stats(split_model, hold_reduced);
                hold["fraction"] = opts.holdout;
                hold["r"] = split_space.r;
                row["holdout"] = std::move(hold);
            }
            rows.push_back(std::move(row));

            ModelFile file;
            file.pca = space;
            file.model = std::move(model);
            file.cloud_fingerprint = fingerprint;
            file.config = FitConfig{opts.threshold, degree, 1e-12};
            const std::string model_name =
                (multi ? "model_" + label + "_deg" : "model_deg") + std::to_string(degree) + ".json";
            save_model_file(file, writer.path_for(model_name));
            writer.note_output(model_name);
        }
        std::cout << label << ": N=" << cloud.rows() << " d=" << cloud.dim() << " r=" << space.r
                  << " explained=" << space.explained << "\n";
    }

    json config{{"embeddings", opts.embeddings}, {"corpus", opts.corpus},   {"format", opts.format},
                {"degrees", opts.degrees},       {"threshold", opts.threshold}, {"holdout", opts.holdout},
                {"seed", opts.common.seed}};
    writer.write_json("fit_report.json", json{{"schema_version", 1},
                                              {"kind", "fit_report"},
                                              {"config", config},
                                              {"inputs", writer.inputs()},
                                              {"rows", rows}});
    writer.finalize("fit", config);
    return 0;
}

int run_probe(const ProbeOpts& opts) {
    if (opts.embeddings.empty()) throw std::invalid_argument("probe: at least one --embeddings file is required");
    if (!opts.model_path.empty() && opts.embeddings.size() > 1)
        throw std::invalid_argument("probe: --model accepts exactly one embeddings file");
    if (opts.model_path.empty() && !opts.fit_inline)
        throw std::invalid_argument("probe: no model file given; pass --model or --fit-inline");
    const CloudFormat format = format_from_string(opts.format);

    OutputWriter writer(opts.common.out_dir);
    const bool multi = opts.embeddings.size() > 1;
    json rows = json::array();
    // pooled accumulation per (method, n_synth)
    std::map<std::pair<std::string, int>, std::vector<json>> pooled_rows;

    for (std::size_t si = 0; si < opts.embeddings.size(); ++si) {
        const std::string& path = opts.embeddings[si];
        writer.add_input("embeddings:" + source_stem(path), path);
        const EmbeddingCloud cloud = load_embeddings(path, format);
        const std::string label = source_stem(path);
        const std::string fingerprint = fingerprint_file(path);
        const std::uint64_t source_seed = substream_seed(opts.common.seed, 0x50ull + si);

        ReducedSpace space;
        ImplicitPolyModel model;
        if (!opts.model_path.empty()) {
            writer.add_input("model", opts.model_path);
            ModelFile file = load_model_file(opts.model_path);
            if (file.cloud_fingerprint != fingerprint)
                throw std::invalid_argument("probe: model fingerprint " + file.cloud_fingerprint +
                                            " does not match the embeddings file (" + fingerprint + ")");
            space = std::move(file.pca);
            model = std::move(file.model);
        } else {
            space = fit_pca(cloud, opts.threshold);
            auto [fitted, diag] = fit_implicit(project(space, cloud.points), opts.degree);
            model = std::move(fitted);
            ModelFile file;
            file.pca = space;
            file.model = model;
            file.cloud_fingerprint = fingerprint;
            file.config = FitConfig{opts.threshold, opts.degree, opts.epsilon};
            const std::string model_name = multi ? "model_inline_" + label + ".json" : "model_inline.json";
            save_model_file(file, writer.path_for(model_name));
            writer.note_output(model_name);
        }

        const Eigen::MatrixXd reduced = project(space, cloud.points);
        const double scale = mean_nn_distance(reduced);

        ProjectionSettings projection;
        projection.f_tol = opts.f_tol;
        projection.grad_tol = opts.grad_tol;
        projection.max_iter = opts.max_iter;
        projection.epsilon = opts.epsilon;
        if (opts.max_step > 0.0) projection.max_step = opts.max_step;

        for (const std::string& method_name : opts.methods) {
            const GenerationMethod method = generation_method_from_string(method_name);
            for (int n : opts.n_synth) {
                if (n < 1) throw std::invalid_argument("probe: --n-synth values must be positive");
                const std::uint64_t seed =
                    substream_seed(substream_seed(source_seed, 100ull + static_cast<std::uint64_t>(method)),
                                   static_cast<std::uint64_t>(n));
                SyntheticBatch batch;
                switch (method) {
                    case GenerationMethod::surface_based: {
                        SurfaceGenerationConfig gen;
                        gen.alpha = opts.alpha;
                        gen.projection = projection;
                        gen.subclusters = opts.subclusters;
                        batch = generate_surface_based(reduced, model, n, gen, seed);
                        break;
                    }
                    case GenerationMethod::linear_interpolation:
                        batch = generate_linear_interpolation(reduced, n, seed);
                        break;
                    case GenerationMethod::local_perturbation:
                        batch = generate_local_perturbation(reduced, n, opts.sigma_scale, seed);
                        break;
                }

                ValidityOptions metric_opts;
                metric_opts.k = opts.knn_k;
                metric_opts.epsilon = opts.epsilon;
                metric_opts.shape_samples = opts.shape_samples;
                metric_opts.seed = seed;
                metric_opts.scale = scale;
                const ValidityReport report = evaluate_batch_validity(reduced, model, batch.points, metric_opts);

                json row{{"source", label},
                         {"method", method_name},
                         {"n_synth", n},
                         {"n_emitted", batch.points.rows()},
                         {"surface", report.surface},
                         {"neighborhood", report.neighborhood},
                         {"neigh_dev", report.neigh_dev},
                         {"distr_dev", report.distr_dev},
                         {"hess_shape", report.hess_shape},
                         {"coeff_cons", report.coeff_cons},
                         {"hess_shape_frobenius", report.hess_shape_frobenius},
                         {"hess_shape_spectral", report.hess_shape_spectral},
                         {"shape_points_retained", report.shape_points_retained},
                         {"convergence_fraction", batch.convergence_fraction()},
                         {"mean_projection_residual", batch.mean_residual()},
                         {"rejected", batch.rejected},
                         {"seed", seed}};
                pooled_rows[{method_name, n}].push_back(row);
                rows.push_back(std::move(row));

                const std::string base =
                    std::string("batch") + (multi ? "_" + label : "") + "_" + method_name + "_" + std::to_string(n);
                EmbeddingCloud reduced_cloud;
                reduced_cloud.points = batch.points;
                for (Eigen::Index i = 0; i < batch.points.rows(); ++i)
                    reduced_cloud.ids.push_back("synth-" + std::to_string(i));
                reduced_cloud.source = "reduced:" + label + ":" + method_name;
                save_embeddings(reduced_cloud, writer.path_for(base + ".bin"), CloudFormat::binary);
                writer.note_output(base + ".bin");

                json diag_points = json::array();
                for (const auto& d : batch.diagnostics)
                    diag_points.push_back(json{{"residual", d.residual},
                                               {"iterations", d.iterations},
                                               {"converged", d.converged},
                                               {"fallback", d.fallback}});
                writer.write_json(base + ".diag.json",
                                  json{{"schema_version", 1},
                                       {"kind", "batch_diagnostics"},
                                       {"method", method_name},
                                       {"seed", seed},
                                       {"requested", batch.requested},
                                       {"rejected", batch.rejected},
                                       {"convergence_fraction", batch.convergence_fraction()},
                                       {"mean_residual", batch.mean_residual()},
                                       {"points", std::move(diag_points)}});

                if (opts.write_ambient) {
                    const EmbeddingCloud ambient = reconstruct_batch(space, batch);
                    save_embeddings(ambient, writer.path_for(base + ".ambient.bin"), CloudFormat::binary);
                    writer.note_output(base + ".ambient.bin");
                }
            }
        }
    }

    json pooled = json::array();
    if (multi) {
        for (const auto& [key, group] : pooled_rows) {
            json agg{{"method", key.first}, {"n_synth", key.second}, {"sources", group.size()}};
            for (const char* metric :
                 {"surface", "neighborhood", "neigh_dev", "distr_dev", "hess_shape", "coeff_cons"}) {
                double sum = 0.0;
                for (const auto& row : group) sum += row.at(metric).get<double>();
                agg[metric] = sum / static_cast<double>(group.size());
            }
            pooled.push_back(std::move(agg));
        }
    }

    json config{{"embeddings", opts.embeddings},
                {"format", opts.format},
                {"model", opts.model_path},
                {"fit_inline", opts.fit_inline},
                {"degree", opts.degree},
                {"threshold", opts.threshold},
                {"methods", opts.methods},
                {"n_synth", opts.n_synth},
                {"alpha", opts.alpha},
                {"sigma_scale", opts.sigma_scale},
                {"subclusters", opts.subclusters},
                {"k", opts.knn_k},
                {"epsilon", opts.epsilon},
                {"shape_samples", opts.shape_samples},
                {"newton", json{{"f_tol", opts.f_tol},
                                {"grad_tol", opts.grad_tol},
                                {"max_iter", opts.max_iter},
                                {"max_step", opts.max_step}}},
                {"scale_kind", "mean_nn_distance"},
                {"neigh_dev_definition",
                 "mean relative difference of mean k-NN distance between each synthetic point and its anchor"},
                {"seed", opts.common.seed}};
    json report{{"schema_version", 1},
                {"kind", "validity_report"},
                {"config", config},
                {"inputs", writer.inputs()},
                {"rows", rows}};
    if (multi) report["pooled"] = std::move(pooled);
    writer.write_json("validity_report.json", report);
    writer.finalize("probe", config);
    return 0;
}

int run_downstream(const DownstreamOpts& opts) {
    if (opts.runs < 1) throw std::invalid_argument("downstream: --runs must be positive");
    if (opts.k_shots.empty()) throw std::invalid_argument("downstream: --k must list at least one value");
    if (opts.target_slot < 1 || opts.target_slot > 4)
        throw std::invalid_argument("downstream: --target-slot must be 1..4");
    const CloudFormat format = format_from_string(opts.format);

    std::vector<AugmentMethod> methods;
    for (const auto& name : opts.methods) {
        if (name == "all") {
            methods = {AugmentMethod::none, AugmentMethod::linear_interpolation, AugmentMethod::local_perturbation,
                       AugmentMethod::surface_based};
            break;
        }
        methods.push_back(augment_method_from_string(name));
    }

    OutputWriter writer(opts.common.out_dir);
    writer.add_input("embeddings", opts.embeddings);
    writer.add_input("corpus", opts.corpus_path);
    const EmbeddingCloud cloud = load_embeddings(opts.embeddings, format);
    const auto records = read_corpus_jsonl(opts.corpus_path);
    const LabeledCloud labeled = join_corpus_embeddings(records, cloud);

    DownstreamConfig config;
    config.n_test_contexts = opts.n_test;
    config.n_runs = opts.runs;
    config.target_slot = opts.target_slot - 1;
    config.variance_threshold = opts.threshold;
    config.alpha = opts.alpha;
    config.sigma_scale = opts.sigma_scale;
    config.threads = opts.common.threads;

    const auto results = run_experiment(labeled, opts.k_shots, methods, config, opts.common.seed);

    json rows = json::array();
    std::ostringstream csv;
    csv << "train_size,method,accuracy_mean,accuracy_std,f1_mean,f1_std\n";
    for (const auto& res : results) {
        json runs = json::array();
        for (const auto& run : res.runs)
            runs.push_back(json{{"accuracy", run.accuracy},
                                {"macro_f1", run.macro_f1},
                                {"n_train_real", run.n_train_real},
                                {"n_train_synthetic", run.n_train_synthetic},
                                {"n_test", run.n_test},
                                {"fallback_classes", run.fallback_classes}});
        rows.push_back(json{{"train_size", res.k_shot},
                            {"method", to_string(res.method)},
                            {"accuracy_mean", res.accuracy_mean},
                            {"accuracy_std", res.accuracy_std},
                            {"f1_mean", res.f1_mean},
                            {"f1_std", res.f1_std},
                            {"runs", std::move(runs)}});
        csv << res.k_shot << ',' << to_string(res.method) << ',' << fmt_double(res.accuracy_mean) << ','
            << fmt_double(res.accuracy_std) << ',' << fmt_double(res.f1_mean) << ',' << fmt_double(res.f1_std)
            << '\n';
    }

    json resolved{{"embeddings", opts.embeddings},
                  {"corpus", opts.corpus_path},
                  {"format", opts.format},
                  {"k_shots", opts.k_shots},
                  {"methods", opts.methods},
                  {"runs", opts.runs},
                  {"n_test_contexts", opts.n_test},
                  {"target_slot", opts.target_slot},
                  {"threshold", opts.threshold},
                  {"alpha", opts.alpha},
                  {"sigma_scale", opts.sigma_scale},
                  {"logreg", json{{"l2", "1/n_train"}, {"max_iter", 500}, {"tol", 1e-6}}},
                  {"fallback",
                   "surface fit falls back to interpolation when a class has fewer than r+2 train points"},
                  {"seed", opts.common.seed}};
    writer.write_json("results.json", json{{"schema_version", 1},
                                           {"kind", "downstream_report"},
                                           {"config", resolved},
                                           {"inputs", writer.inputs()},
                                           {"rows", rows}});
    writer.write_text("results.csv", csv.str());

    if (opts.ablate) {
        const int k_ab = opts.ablate_k.value_or(opts.k_shots.back());
        const auto ablation = ablation_report(results, k_ab);
        json ab_rows = json::array();
        std::ostringstream ab_csv;
        ab_csv << "method,delta_accuracy,delta_macro_f1,best_acc_count,best_f1_count,n_runs\n";
        for (const auto& row : ablation) {
            ab_rows.push_back(json{{"method", to_string(row.method)},
                                   {"delta_accuracy", row.delta_accuracy},
                                   {"delta_macro_f1", row.delta_macro_f1},
                                   {"best_acc_count", row.best_acc_count},
                                   {"best_f1_count", row.best_f1_count},
                                   {"n_runs", row.n_runs}});
            ab_csv << to_string(row.method) << ',' << fmt_double(row.delta_accuracy) << ','
                   << fmt_double(row.delta_macro_f1) << ',' << row.best_acc_count << ',' << row.best_f1_count << ','
                   << row.n_runs << '\n';
        }
        writer.write_json("ablation.json", json{{"schema_version", 1},
                                                {"kind", "ablation_report"},
                                                {"k_shot", k_ab},
                                                {"rows", ab_rows}});
        writer.write_text("ablation.csv", ab_csv.str());
    }

    writer.finalize("downstream", resolved);
    for (const auto& res : results)
        std::cout << "k=" << res.k_shot << " " << to_string(res.method) << ": acc=" << res.accuracy_mean << "+/-"
                  << res.accuracy_std << " f1=" << res.f1_mean << "+/-" << res.f1_std << "\n";
    return 0;
}

int run_report(const ReportOpts& opts) {
    const fs::path dir(opts.common.out_dir);
    const fs::path manifest_path = dir / "manifest.json";
    std::ifstream in(manifest_path);
    if (!in) throw std::runtime_error("report: no manifest.json under " + dir.string());
    json manifest = json::parse(in);

    json verification = json::object();
    bool all_ok = true;
    for (const auto& [label, entry] : manifest.at("inputs").items()) {
        const std::string path = entry.at("path").get<std::string>();
        json status;
        if (!fs::exists(path)) {
            status = {{"status", "missing"}};
            all_ok = false;
        } else {
            const std::string current = fingerprint_file(path);
            const bool match = current == entry.at("fingerprint").get<std::string>();
            status = {{"status", match ? "ok" : "drift"}, {"fingerprint", current}};
            all_ok = all_ok && match;
        }
        verification[label] = std::move(status);
    }

    json reports = json::object();
    for (const auto& name : manifest.at("outputs")) {
        const std::string file = name.get<std::string>();
        if (file.size() < 5 || file.substr(file.size() - 5) != ".json") continue;
        std::ifstream rin(dir / file);
        if (!rin) continue;
        json content = json::parse(rin);
        if (!content.contains("kind")) continue;
        const std::string kind = content.at("kind").get<std::string>();
        if (content.contains("rows"))
            reports[file] = {{"kind", kind}, {"rows", content.at("rows").size()}};
        else
            reports[file] = {{"kind", kind}};
    }

    json summary{{"schema_version", 1},
                 {"kind", "summary"},
                 {"command", manifest.at("command")},
                 {"inputs", verification},
                 {"inputs_ok", all_ok},
                 {"reports", reports}};
    std::ofstream out(dir / "summary.json", std::ios::trunc);
    out << summary.dump(2) << '\n';
    std::cout << summary.dump(2) << '\n';
    return all_ok ? 0 : 1;
}

}  // namespace embgeom::cli
