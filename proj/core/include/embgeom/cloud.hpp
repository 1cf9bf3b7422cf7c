#pragma once

#include <Eigen/Core>
#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace embgeom {

enum class CloudFormat { binary, csv };

/// A local embedding point cloud: N points of dimension d with per-row ids.
/// Immutable by convention after construction; safe to share read-only.
struct EmbeddingCloud {
    Eigen::MatrixXd points;        // N x d, finite values only
    std::vector<std::string> ids;  // length N, unique, no embedded newlines
    std::string source;            // free-form provenance

    Eigen::Index rows() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }

    /// Throws std::invalid_argument on any invariant violation.
    void validate() const;
};

enum class Family { A, B, C };
enum class Regime { C1, C2, C3, C4, C5 };

std::string to_string(Family f);
std::string to_string(Regime r);
Family family_from_string(const std::string& s);
Regime regime_from_string(const std::string& s);

struct CorpusRecord {
    std::string id;
    Family family = Family::A;
    Regime regime = Regime::C1;
    std::array<std::string, 4> slots;  // s1..s4
    std::string sentence;
};

/// Points joined with their slot annotations; row order follows the corpus.
struct LabeledCloud {
    Eigen::MatrixXd points;
    std::vector<std::string> ids;
    std::vector<std::array<std::string, 4>> slots;

    Eigen::Index rows() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

/// Binary layout: magic "CPGE", version u32, N u64, d u32 (all little-endian),
/// then N*d row-major little-endian float32, then N newline-terminated ids.
EmbeddingCloud load_embeddings(const std::filesystem::path& path, CloudFormat format);
void save_embeddings(const EmbeddingCloud& cloud, const std::filesystem::path& path, CloudFormat format);

/// Size in bytes a cloud occupies in the binary format.
std::uint64_t binary_file_size(const EmbeddingCloud& cloud);

/// Joins corpus records with their embeddings by id. The id sets must be
/// identical; output rows follow corpus order.
LabeledCloud join_corpus_embeddings(const std::vector<CorpusRecord>& corpus, const EmbeddingCloud& cloud);

}  // namespace embgeom
