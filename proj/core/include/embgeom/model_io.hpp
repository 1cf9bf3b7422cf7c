#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "embgeom/reduce.hpp"
#include "embgeom/surface.hpp"

namespace embgeom {

/// 64-bit FNV-1a content hash, hex encoded. Used to tie reports to the exact
/// input files they were computed from.
std::string fingerprint_bytes(std::string_view bytes);
std::string fingerprint_file(const std::filesystem::path& path);

struct FitConfig {
    double variance_threshold = 0.9;
    int degree = 2;
    double epsilon = 1e-12;
};

/// A fitted carrier together with its PCA frame and provenance. Round-trips
/// bit-exactly through save/load (doubles are serialized with round-trip
/// precision; the monomial basis is regenerated from degree and r).
struct ModelFile {
    ReducedSpace pca;
    ImplicitPolyModel model;
    std::string cloud_fingerprint;
    FitConfig config;
};

void save_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model_file(const std::filesystem::path& path);

}  // namespace embgeom
