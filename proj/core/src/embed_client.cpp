#include "embgeom/corpus.hpp"

#include <chrono>
#include <stdexcept>
#include <thread>

// httplib must follow the Eigen-bearing headers: its socket includes leak
// macros that break Eigen's template definitions
#include <httplib.h>
#include <json.hpp>

#include "parallel.hpp"

namespace embgeom {

namespace {

using nlohmann::json;

struct ParsedUrl {
    std::string host;
    int port = 80;
    std::string path = "/";
};

ParsedUrl parse_http_url(const std::string& url) {
    const std::string prefix = "http://";
    if (url.rfind(prefix, 0) != 0)
        throw std::invalid_argument("embed_via_service: endpoint must start with http:// (got '" + url + "')");
    std::string rest = url.substr(prefix.size());
    ParsedUrl out;
    const std::size_t slash = rest.find('/');
    std::string authority = slash == std::string::npos ? rest : rest.substr(0, slash);
    if (slash != std::string::npos) out.path = rest.substr(slash);
    const std::size_t colon = authority.find(':');
    if (colon == std::string::npos) {
        out.host = authority;
    } else {
        out.host = authority.substr(0, colon);
        out.port = std::stoi(authority.substr(colon + 1));
    }
    if (out.host.empty()) throw std::invalid_argument("embed_via_service: endpoint has no host");
    return out;
}

bool transient_status(int status) { return status == 429 || status >= 500; }

std::vector<std::vector<double>> request_batch(const ParsedUrl& url, const EmbedServiceConfig& config,
                                               const std::vector<std::string>& sentences, std::size_t begin,
                                               std::size_t end) {
    json body;
    body["sentences"] = json::array();
    for (std::size_t i = begin; i < end; ++i) body["sentences"].push_back(sentences[i]);
    const std::string payload = body.dump();

    std::string last_error;
    for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
        if (attempt > 0) {
            const auto backoff = std::chrono::milliseconds(static_cast<int>(50.0 * (1 << (attempt - 1))));
            std::this_thread::sleep_for(backoff);
        }
        httplib::Client client(url.host, url.port);
        client.set_connection_timeout(std::chrono::milliseconds(static_cast<int>(config.timeout_seconds * 1000)));
        client.set_read_timeout(std::chrono::milliseconds(static_cast<int>(config.timeout_seconds * 1000)));
        auto res = client.Post(url.path, payload, "application/json");
        if (!res) {
            last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
            continue;  // transient
        }
        if (res->status != 200) {
            last_error = "HTTP " + std::to_string(res->status);
            if (transient_status(res->status)) continue;
            throw std::runtime_error("embed_via_service: batch " + std::to_string(begin / config.batch_size) +
                                     " failed permanently: " + last_error);
        }
        json parsed = json::parse(res->body);
        const auto& vectors = parsed.at("vectors");
        if (!vectors.is_array() || vectors.size() != end - begin)
            throw std::runtime_error("embed_via_service: count mismatch (sent " + std::to_string(end - begin) +
                                     " sentences, received " + std::to_string(vectors.size()) + " vectors)");
        std::vector<std::vector<double>> out;
        out.reserve(vectors.size());
        for (const auto& vec : vectors) out.push_back(vec.get<std::vector<double>>());
        return out;
    }
    throw std::runtime_error("embed_via_service: batch " + std::to_string(begin / config.batch_size) +
                             " failed after " + std::to_string(config.max_retries + 1) + " attempts: " + last_error);
}

}  // namespace

EmbeddingCloud embed_via_service(const std::vector<std::string>& sentences, const EmbedServiceConfig& config) {
    if (sentences.empty()) throw std::invalid_argument("embed_via_service: no sentences");
    if (config.batch_size < 1) throw std::invalid_argument("embed_via_service: batch_size must be >= 1");
    const ParsedUrl url = parse_http_url(config.endpoint);

    const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);
    const std::size_t batches = embed_batch_count(sentences.size(), batch_size);
    std::vector<std::vector<std::vector<double>>> results(batches);

    // bounded parallelism; results land in their batch slot so order is kept
    detail::parallel_for(
        batches,
        [&](std::size_t b) {
            const std::size_t begin = b * batch_size;
            const std::size_t end = std::min(begin + batch_size, sentences.size());
            results[b] = request_batch(url, config, sentences, begin, end);
        },
        static_cast<unsigned>(std::max(1, config.max_in_flight)));

    std::size_t dim = 0;
    for (const auto& batch : results)
        for (const auto& vec : batch) {
            if (dim == 0) dim = vec.size();
            if (vec.size() != dim)
                throw std::runtime_error("embed_via_service: dimension inconsistency across batches (" +
                                         std::to_string(dim) + " vs " + std::to_string(vec.size()) + ")");
        }
    if (dim == 0) throw std::runtime_error("embed_via_service: service returned empty vectors");

    EmbeddingCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(sentences.size()), static_cast<Eigen::Index>(dim));
    cloud.ids.reserve(sentences.size());
    Eigen::Index row = 0;
    for (const auto& batch : results)
        for (const auto& vec : batch) {
            for (std::size_t j = 0; j < dim; ++j) cloud.points(row, static_cast<Eigen::Index>(j)) = vec[j];
            ++row;
        }
    for (std::size_t i = 0; i < sentences.size(); ++i) cloud.ids.push_back(std::to_string(i));
    cloud.source = config.endpoint;
    cloud.validate();
    return cloud;
}

}  // namespace embgeom
