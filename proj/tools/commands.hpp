#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace embgeom::cli {

struct CommonOpts {
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
};

struct CorpusOpts {
    CommonOpts common;
    std::string family = "all";  // A | B | C | all
    std::string regime = "C1";
};

struct EmbedOpts {
    CommonOpts common;
    std::string corpus_path;
    std::string endpoint;  // empty -> EMBGEOM_ENDPOINT environment variable
    int batch_size = 256;
    double timeout = 30.0;
    int parallel = 4;
    std::string output_name = "embeddings.bin";
};

struct FitOpts {
    CommonOpts common;
    std::vector<std::string> embeddings;
    std::vector<std::string> corpus;  // optional, paired with embeddings
    std::string format = "binary";
    std::vector<int> degrees = {1, 2};
    double threshold = 0.9;
    double holdout = 0.0;  // fraction; 0 disables the validation split
};

struct ProbeOpts {
    CommonOpts common;
    std::vector<std::string> embeddings;
    std::string format = "binary";
    std::string model_path;  // empty -> fit inline
    bool fit_inline = false;
    int degree = 2;
    double threshold = 0.9;
    std::vector<std::string> methods = {"surface_based", "linear_interpolation", "local_perturbation"};
    std::vector<int> n_synth = {3000};
    double alpha = 1.0;
    double sigma_scale = 0.5;
    int subclusters = 0;
    int knn_k = 5;
    double epsilon = 1e-12;
    int shape_samples = 256;
    double f_tol = 1e-6;
    double grad_tol = 1e-8;
    int max_iter = 50;
    double max_step = 0.0;  // <= 0 selects the automatic cap
    bool write_ambient = true;
};

struct DownstreamOpts {
    CommonOpts common;
    std::string embeddings;
    std::string corpus_path;
    std::string format = "binary";
    std::vector<int> k_shots = {1, 2, 3, 5, 10};
    std::vector<std::string> methods = {"none", "linear_interpolation", "local_perturbation", "surface_based"};
    int runs = 10;
    int n_test = 300;
    int target_slot = 4;  // 1-based on the command line
    double threshold = 0.9;
    double alpha = 1.0;
    double sigma_scale = 0.5;
    bool ablate = false;
    std::optional<int> ablate_k;
};

struct ReportOpts {
    CommonOpts common;
};

int run_corpus(const CorpusOpts& opts);
int run_embed(const EmbedOpts& opts);
int run_fit(const FitOpts& opts);
int run_probe(const ProbeOpts& opts);
int run_downstream(const DownstreamOpts& opts);
int run_report(const ReportOpts& opts);

}  // namespace embgeom::cli
