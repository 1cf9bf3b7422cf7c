#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "embgeom/cloud.hpp"

namespace embgeom {

/// A sentence template with four lexical slots of 18 variants each, plus the
/// anchor value each slot takes when it does not vary.
struct TemplateFamily {
    Family name = Family::A;
    std::string pattern;  // exactly four "{}" placeholders
    std::array<std::vector<std::string>, 4> slot_lists;
    std::array<std::string, 4> anchors;

    void validate() const;
    int anchor_index(int slot) const;
    /// Byte-for-byte substitution of the four slot values into the pattern.
    std::string render(const std::array<std::string, 4>& slots) const;
};

struct RegimeSpec {
    Regime regime = Regime::C1;
    std::vector<int> varying;  // slot positions, ascending

    static RegimeSpec of(Regime r);
    std::uint64_t cardinality() const;  // 18^|varying|
};

/// The three built-in template families, slot lists transcribed verbatim.
const std::vector<TemplateFamily>& builtin_families();
const TemplateFamily& builtin_family(Family f);

/// Deterministic odometer enumeration over the varying slots (first varying
/// slot most significant); non-varying slots fixed at the family anchors.
/// Record ids are "{family}-{regime}-{i1}-{i2}-{i3}-{i4}" with zero-based
/// indices into the slot lists.
std::vector<CorpusRecord> enumerate_regime(const TemplateFamily& family, const RegimeSpec& regime);

/// JSON-lines persistence, one record per line.
void write_corpus_jsonl(const std::vector<CorpusRecord>& records, const std::filesystem::path& path);
std::vector<CorpusRecord> read_corpus_jsonl(const std::filesystem::path& path);

struct EmbedServiceConfig {
    std::string endpoint;  // http://host[:port][/path]
    int batch_size = 256;
    double timeout_seconds = 30.0;
    int max_in_flight = 4;  // bounded request parallelism
    int max_retries = 3;    // extra attempts on transient failures
};

std::size_t embed_batch_count(std::size_t n_sentences, std::size_t batch_size);

/// Sends the sentences to an embedding service in batches:
/// POST {"sentences": [...]} -> {"vectors": [[...], ...]}.
/// Output order matches input order; the vector dimension must be constant.
EmbeddingCloud embed_via_service(const std::vector<std::string>& sentences, const EmbedServiceConfig& config);

}  // namespace embgeom
