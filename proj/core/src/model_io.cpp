#include "embgeom/model_io.hpp"

#include <cstdint>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace embgeom {

namespace {

using nlohmann::json;

json vector_to_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
    Eigen::VectorXd v(arr.size());
    for (std::size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
    return v;
}

}  // namespace

std::string fingerprint_bytes(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

std::string fingerprint_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("fingerprint_file: cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fingerprint_bytes(bytes);
}

void save_model_file(const ModelFile& file, const std::filesystem::path& path) {
    json pca;
    pca["mean"] = vector_to_json(file.pca.mean);
    json components = json::array();
    for (Eigen::Index c = 0; c < file.pca.components.cols(); ++c)
        components.push_back(vector_to_json(file.pca.components.col(c)));
    pca["components"] = std::move(components);
    pca["r"] = file.pca.r;
    pca["explained"] = file.pca.explained;
    pca["spectrum"] = file.pca.spectrum;

    json j;
    j["schema_version"] = 1;
    j["kind"] = "model_file";
    j["pca"] = std::move(pca);
    j["model"] = {{"degree", file.model.basis.degree},
                  {"vars", file.model.basis.vars},
                  {"theta", vector_to_json(file.model.theta)}};
    j["cloud_fingerprint"] = file.cloud_fingerprint;
    j["config"] = {{"variance_threshold", file.config.variance_threshold},
                   {"degree", file.config.degree},
                   {"epsilon", file.config.epsilon}};

    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("save_model_file: cannot open " + path.string() + " for writing");
    out << j.dump(2) << '\n';
    if (!out) throw std::runtime_error("save_model_file: write failed: " + path.string());
}

ModelFile load_model_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_model_file: cannot open " + path.string());
    json j = json::parse(in);
    if (j.at("kind").get<std::string>() != "model_file")
        throw std::runtime_error("load_model_file: " + path.string() + " is not a model file");

    ModelFile file;
    const auto& pca = j.at("pca");
    file.pca.mean = vector_from_json(pca.at("mean"));
    file.pca.r = pca.at("r").get<int>();
    file.pca.explained = pca.at("explained").get<double>();
    file.pca.spectrum = pca.at("spectrum").get<std::vector<double>>();
    const auto& components = pca.at("components");
    if (static_cast<int>(components.size()) != file.pca.r)
        throw std::runtime_error("load_model_file: component count does not match r");
    file.pca.components.resize(file.pca.mean.size(), file.pca.r);
    for (int c = 0; c < file.pca.r; ++c)
        file.pca.components.col(c) = vector_from_json(components[static_cast<std::size_t>(c)]);

    const auto& model = j.at("model");
    MonomialBasis basis = build_basis(model.at("vars").get<int>(), model.at("degree").get<int>());
    Eigen::VectorXd theta = vector_from_json(model.at("theta"));
    if (static_cast<std::size_t>(theta.size()) != basis.size())
        throw std::runtime_error("load_model_file: theta length does not match basis");
    // stored theta is already canonical; renormalizing here would break the
    // bit-exact round-trip guarantee
    if (std::abs(theta.norm() - 1.0) > 1e-9)
        throw std::runtime_error("load_model_file: theta is not unit norm");
    file.model = ImplicitPolyModel{std::move(basis), std::move(theta)};

    file.cloud_fingerprint = j.at("cloud_fingerprint").get<std::string>();
    const auto& config = j.at("config");
    file.config.variance_threshold = config.at("variance_threshold").get<double>();
    file.config.degree = config.at("degree").get<int>();
    file.config.epsilon = config.at("epsilon").get<double>();
    return file;
}

}  // namespace embgeom
