#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"

#include <CLI11.hpp>
#include <json.hpp>

namespace {

using embgeom::cli::CommonOpts;
using nlohmann::json;

std::vector<int> parse_int_list(const std::string& s) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoi(tok));
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated list of integers, got '" + s + "'");
    return out;
}

std::vector<std::string> parse_string_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) out.push_back(tok);
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated list, got '" + s + "'");
    return out;
}

// Values resolve flag > config file > built-in default.
class ConfigLayer {
public:
    void load(const std::string& path) {
        if (path.empty()) return;
        std::ifstream in(path);
        if (!in) throw std::runtime_error("cannot open config file " + path);
        config_ = json::parse(in);
    }

    template <class T>
    void apply(const CLI::Option* opt, const char* key, T& target) const {
        if (opt && opt->count() > 0) return;
        if (config_.contains(key)) target = config_.at(key).get<T>();
    }

    void apply_list_int(const CLI::Option* opt, const char* key, const std::string& cli_value,
                        std::vector<int>& target) const {
        if (opt && opt->count() > 0) {
            target = parse_int_list(cli_value);
        } else if (config_.contains(key)) {
            target = config_.at(key).get<std::vector<int>>();
        }
    }

    void apply_list_string(const CLI::Option* opt, const char* key, const std::string& cli_value,
                           std::vector<std::string>& target) const {
        if (opt && opt->count() > 0) {
            target = parse_string_list(cli_value);
        } else if (config_.contains(key)) {
            target = config_.at(key).get<std::vector<std::string>>();
        }
    }

private:
    json config_ = json::object();
};

int fail_with_error_json(const std::string& type, const std::string& message) {
    json err{{"schema_version", 1}, {"kind", "error"}, {"error", json{{"type", type}, {"message", message}}}};
    std::cout << err.dump(2) << std::endl;
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Local geometry toolkit for embedding clouds: adaptive PCA reduction, implicit polynomial "
                 "carriers, surface-aligned latent generation, geometric validity metrics and a few-shot "
                 "classification harness"};
    app.require_subcommand(1);
    app.fallthrough();  // --config may appear after the subcommand name

    std::string config_path;
    app.add_option("--config", config_path, "JSON config file; command-line flags take precedence");

    auto add_common = [&](CLI::App* cmd, CommonOpts& common) {
        auto* out = cmd->add_option("--out", common.out_dir, "output directory");
        cmd->add_option("--seed", common.seed, "master seed (reports embed it; no entropy defaults)");
        cmd->add_option("--threads", common.threads, "worker threads (0 = hardware concurrency)");
        return out;
    };

    // corpus
    embgeom::cli::CorpusOpts corpus_opts;
    auto* corpus_cmd = app.add_subcommand("corpus", "enumerate a template-family regime to JSONL");
    add_common(corpus_cmd, corpus_opts.common);
    auto* corpus_family = corpus_cmd->add_option("--family", corpus_opts.family, "A, B, C or all");
    auto* corpus_regime = corpus_cmd->add_option("--regime", corpus_opts.regime, "C1..C5");

    // embed
    embgeom::cli::EmbedOpts embed_opts;
    auto* embed_cmd = app.add_subcommand("embed", "encode a corpus through an embedding service");
    add_common(embed_cmd, embed_opts.common);
    auto* embed_corpus = embed_cmd->add_option("--corpus", embed_opts.corpus_path, "corpus JSONL file");
    auto* embed_endpoint =
        embed_cmd->add_option("--endpoint", embed_opts.endpoint, "http endpoint (default: EMBGEOM_ENDPOINT)");
    auto* embed_batch = embed_cmd->add_option("--batch-size", embed_opts.batch_size, "sentences per request");
    auto* embed_timeout = embed_cmd->add_option("--timeout", embed_opts.timeout, "request timeout, seconds");
    auto* embed_parallel = embed_cmd->add_option("--parallel", embed_opts.parallel, "in-flight batches");
    auto* embed_name = embed_cmd->add_option("--name", embed_opts.output_name, "output file name");

    // fit
    embgeom::cli::FitOpts fit_opts;
    auto* fit_cmd = app.add_subcommand("fit", "fit carriers in the adaptive reduced space");
    add_common(fit_cmd, fit_opts.common);
    auto* fit_embeddings = fit_cmd->add_option("--embeddings", fit_opts.embeddings, "embedding cloud file(s)");
    auto* fit_corpus = fit_cmd->add_option("--corpus", fit_opts.corpus, "corpus JSONL file(s), paired by order");
    auto* fit_format = fit_cmd->add_option("--format", fit_opts.format, "binary or csv");
    std::string fit_degrees_raw;
    auto* fit_degrees = fit_cmd->add_option("--degrees", fit_degrees_raw, "comma-separated degrees, e.g. 1,2,3");
    auto* fit_threshold = fit_cmd->add_option("--threshold", fit_opts.threshold, "explained-variance threshold");
    auto* fit_holdout = fit_cmd->add_option("--holdout", fit_opts.holdout, "validation fraction in [0,1)");

    // probe
    embgeom::cli::ProbeOpts probe_opts;
    auto* probe_cmd = app.add_subcommand("probe", "generate synthetic batches and score their validity");
    add_common(probe_cmd, probe_opts.common);
    auto* probe_embeddings = probe_cmd->add_option("--embeddings", probe_opts.embeddings, "embedding cloud file(s)");
    auto* probe_format = probe_cmd->add_option("--format", probe_opts.format, "binary or csv");
    auto* probe_model = probe_cmd->add_option("--model", probe_opts.model_path, "fitted model file");
    auto* probe_inline = probe_cmd->add_flag("--fit-inline", probe_opts.fit_inline, "fit the carrier on the fly");
    auto* probe_degree = probe_cmd->add_option("--degree", probe_opts.degree, "carrier degree for --fit-inline");
    auto* probe_threshold = probe_cmd->add_option("--threshold", probe_opts.threshold, "PCA threshold");
    std::string probe_methods_raw;
    auto* probe_methods = probe_cmd->add_option("--methods", probe_methods_raw,
                                                "surface_based,linear_interpolation,local_perturbation");
    std::string probe_nsynth_raw;
    auto* probe_nsynth = probe_cmd->add_option("--n-synth", probe_nsynth_raw, "batch sizes, e.g. 1000,3000");
    auto* probe_alpha = probe_cmd->add_option("--alpha", probe_opts.alpha, "Dirichlet concentration");
    auto* probe_sigma = probe_cmd->add_option("--sigma-scale", probe_opts.sigma_scale, "perturbation scale factor");
    auto* probe_subclusters =
        probe_cmd->add_option("--subclusters", probe_opts.subclusters, "k-means pre-grouping (0 = off)");
    auto* probe_k = probe_cmd->add_option("--k", probe_opts.knn_k, "neighbourhood size for the metrics");
    auto* probe_eps = probe_cmd->add_option("--epsilon", probe_opts.epsilon, "residual stabilizer");
    auto* probe_shape = probe_cmd->add_option("--shape-samples", probe_opts.shape_samples, "shape sample count L");
    auto* probe_ftol = probe_cmd->add_option("--f-tol", probe_opts.f_tol, "projection residual tolerance");
    auto* probe_gtol = probe_cmd->add_option("--grad-tol", probe_opts.grad_tol, "projection gradient tolerance");
    auto* probe_iters = probe_cmd->add_option("--max-iter", probe_opts.max_iter, "projection iteration cap");
    auto* probe_step = probe_cmd->add_option("--max-step", probe_opts.max_step, "step cap (<=0 selects automatic)");
    auto* probe_ambient =
        probe_cmd->add_flag("--ambient,!--no-ambient", probe_opts.write_ambient, "write ambient reconstructions");

    // downstream
    embgeom::cli::DownstreamOpts down_opts;
    auto* down_cmd = app.add_subcommand("downstream", "context-held-out slot classification harness");
    add_common(down_cmd, down_opts.common);
    auto* down_embeddings = down_cmd->add_option("--embeddings", down_opts.embeddings, "embedding cloud file");
    auto* down_corpus = down_cmd->add_option("--corpus", down_opts.corpus_path, "corpus JSONL file");
    auto* down_format = down_cmd->add_option("--format", down_opts.format, "binary or csv");
    std::string down_k_raw;
    auto* down_k = down_cmd->add_option("--k", down_k_raw, "comma-separated k-shot values, e.g. 1,2,3,5,10");
    std::string down_methods_raw;
    auto* down_methods = down_cmd->add_option("--methods", down_methods_raw, "method list or 'all'");
    auto* down_runs = down_cmd->add_option("--runs", down_opts.runs, "random runs per configuration");
    auto* down_ntest = down_cmd->add_option("--n-test", down_opts.n_test, "held-out test contexts");
    auto* down_target = down_cmd->add_option("--target-slot", down_opts.target_slot, "target slot, 1-based");
    auto* down_threshold = down_cmd->add_option("--threshold", down_opts.threshold, "per-class PCA threshold");
    auto* down_alpha = down_cmd->add_option("--alpha", down_opts.alpha, "Dirichlet concentration");
    auto* down_sigma = down_cmd->add_option("--sigma-scale", down_opts.sigma_scale, "perturbation scale factor");
    int ablate_k_flag = -1;
    auto* down_ablate = down_cmd->add_flag("--ablate", down_opts.ablate, "emit the delta-vs-baseline report");
    auto* down_ablate_k = down_cmd->add_option("--ablate-k", ablate_k_flag, "k value for the ablation report");

    // report
    embgeom::cli::ReportOpts report_opts;
    auto* report_cmd = app.add_subcommand("report", "verify fingerprints and summarize an output directory");
    add_common(report_cmd, report_opts.common);

    CLI11_PARSE(app, argc, argv);

    try {
        ConfigLayer config;
        config.load(config_path);

        if (corpus_cmd->parsed()) {
            config.apply(corpus_family, "family", corpus_opts.family);
            config.apply(corpus_regime, "regime", corpus_opts.regime);
            return embgeom::cli::run_corpus(corpus_opts);
        }
        if (embed_cmd->parsed()) {
            config.apply(embed_corpus, "corpus", embed_opts.corpus_path);
            config.apply(embed_endpoint, "endpoint", embed_opts.endpoint);
            config.apply(embed_batch, "batch_size", embed_opts.batch_size);
            config.apply(embed_timeout, "timeout", embed_opts.timeout);
            config.apply(embed_parallel, "parallel", embed_opts.parallel);
            config.apply(embed_name, "name", embed_opts.output_name);
            return embgeom::cli::run_embed(embed_opts);
        }
        if (fit_cmd->parsed()) {
            config.apply(fit_embeddings, "embeddings", fit_opts.embeddings);
            config.apply(fit_corpus, "corpus", fit_opts.corpus);
            config.apply(fit_format, "format", fit_opts.format);
            config.apply_list_int(fit_degrees, "degrees", fit_degrees_raw, fit_opts.degrees);
            config.apply(fit_threshold, "threshold", fit_opts.threshold);
            config.apply(fit_holdout, "holdout", fit_opts.holdout);
            return embgeom::cli::run_fit(fit_opts);
        }
        if (probe_cmd->parsed()) {
            config.apply(probe_embeddings, "embeddings", probe_opts.embeddings);
            config.apply(probe_format, "format", probe_opts.format);
            config.apply(probe_model, "model", probe_opts.model_path);
            config.apply(probe_inline, "fit_inline", probe_opts.fit_inline);
            config.apply(probe_degree, "degree", probe_opts.degree);
            config.apply(probe_threshold, "threshold", probe_opts.threshold);
            config.apply_list_string(probe_methods, "methods", probe_methods_raw, probe_opts.methods);
            config.apply_list_int(probe_nsynth, "n_synth", probe_nsynth_raw, probe_opts.n_synth);
            config.apply(probe_alpha, "alpha", probe_opts.alpha);
            config.apply(probe_sigma, "sigma_scale", probe_opts.sigma_scale);
            config.apply(probe_subclusters, "subclusters", probe_opts.subclusters);
            config.apply(probe_k, "k", probe_opts.knn_k);
            config.apply(probe_eps, "epsilon", probe_opts.epsilon);
            config.apply(probe_shape, "shape_samples", probe_opts.shape_samples);
            config.apply(probe_ftol, "f_tol", probe_opts.f_tol);
            config.apply(probe_gtol, "grad_tol", probe_opts.grad_tol);
            config.apply(probe_iters, "max_iter", probe_opts.max_iter);
            config.apply(probe_step, "max_step", probe_opts.max_step);
            config.apply(probe_ambient, "ambient", probe_opts.write_ambient);
            return embgeom::cli::run_probe(probe_opts);
        }
        if (down_cmd->parsed()) {
            config.apply(down_embeddings, "embeddings", down_opts.embeddings);
            config.apply(down_corpus, "corpus", down_opts.corpus_path);
            config.apply(down_format, "format", down_opts.format);
            config.apply_list_int(down_k, "k_shots", down_k_raw, down_opts.k_shots);
            config.apply_list_string(down_methods, "methods", down_methods_raw, down_opts.methods);
            config.apply(down_runs, "runs", down_opts.runs);
            config.apply(down_ntest, "n_test_contexts", down_opts.n_test);
            config.apply(down_target, "target_slot", down_opts.target_slot);
            config.apply(down_threshold, "threshold", down_opts.threshold);
            config.apply(down_alpha, "alpha", down_opts.alpha);
            config.apply(down_sigma, "sigma_scale", down_opts.sigma_scale);
            config.apply(down_ablate, "ablate", down_opts.ablate);
            config.apply(down_ablate_k, "ablate_k", ablate_k_flag);
            if (ablate_k_flag > 0) down_opts.ablate_k = ablate_k_flag;
            return embgeom::cli::run_downstream(down_opts);
        }
        if (report_cmd->parsed()) {
            return embgeom::cli::run_report(report_opts);
        }
    } catch (const std::invalid_argument& e) {
        return fail_with_error_json("invalid_argument", e.what());
    } catch (const std::length_error& e) {
        return fail_with_error_json("length_error", e.what());
    } catch (const std::exception& e) {
        return fail_with_error_json("runtime_error", e.what());
    }
    return fail_with_error_json("usage", "no subcommand given");
}
