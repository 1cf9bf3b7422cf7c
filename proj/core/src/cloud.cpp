#include "embgeom/cloud.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

namespace embgeom {

namespace {

constexpr char kMagic[4] = {'C', 'P', 'G', 'E'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(out, bits);
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}

std::uint64_t get_u64(const unsigned char* p) {
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
    return v;
}

float get_f32(const unsigned char* p) {
    const std::uint32_t bits = get_u32(p);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

void check_unique_ids(const std::vector<std::string>& ids) {
    std::unordered_set<std::string> seen;
    seen.reserve(ids.size());
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw std::invalid_argument("duplicate id: " + id);
    }
}

EmbeddingCloud load_binary(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::size_t size = bytes.size();

    if (size < 20 || std::memcmp(p, kMagic, 4) != 0)
        throw std::runtime_error(path.string() + ": malformed header (bad magic)");
    const std::uint32_t version = get_u32(p + 4);
    if (version != kVersion)
        throw std::runtime_error(path.string() + ": unsupported version " + std::to_string(version));
    const std::uint64_t n = get_u64(p + 8);
    const std::uint32_t d = get_u32(p + 16);
    if (n == 0 || d == 0) throw std::runtime_error(path.string() + ": malformed header (empty cloud)");

    const std::uint64_t payload = n * static_cast<std::uint64_t>(d) * 4;
    if (size < 20 + payload)
        throw std::runtime_error(path.string() + ": dimension mismatch between header and payload");

    EmbeddingCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    const unsigned char* q = p + 20;
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::uint32_t j = 0; j < d; ++j, q += 4) {
            const float v = get_f32(q);
            if (!std::isfinite(v))
                throw std::runtime_error(path.string() + ": non-finite value at row " + std::to_string(i));
            cloud.points(static_cast<Eigen::Index>(i), j) = static_cast<double>(v);
        }
    }

    // ids: exactly n newline-terminated lines must remain
    std::size_t pos = 20 + static_cast<std::size_t>(payload);
    cloud.ids.reserve(n);
    for (std::uint64_t i = 0; i < n; ++i) {
        const std::size_t nl = bytes.find('\n', pos);
        if (nl == std::string::npos)
            throw std::runtime_error(path.string() + ": truncated id section (declared " + std::to_string(n) +
                                     " ids, found " + std::to_string(i) + ")");
        cloud.ids.push_back(bytes.substr(pos, nl - pos));
        pos = nl + 1;
    }
    if (pos != size) throw std::runtime_error(path.string() + ": trailing bytes after id section");
    check_unique_ids(cloud.ids);
    cloud.source = path.string();
    return cloud;
}

void save_binary(const EmbeddingCloud& cloud, const std::filesystem::path& path) {
    std::string out;
    out.reserve(static_cast<std::size_t>(binary_file_size(cloud)));
    out.append(kMagic, 4);
    put_u32(out, kVersion);
    put_u64(out, static_cast<std::uint64_t>(cloud.rows()));
    put_u32(out, static_cast<std::uint32_t>(cloud.dim()));
    for (Eigen::Index i = 0; i < cloud.rows(); ++i)
        for (Eigen::Index j = 0; j < cloud.dim(); ++j)
            put_f32(out, static_cast<float>(cloud.points(i, j)));
    for (const auto& id : cloud.ids) {
        out.append(id);
        out.push_back('\n');
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

bool parse_double(const std::string& tok, double& out) {
    const char* begin = tok.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    return *end == '\0';
}

EmbeddingCloud load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());

    std::vector<std::vector<double>> rows;
    std::vector<std::string> ids;
    bool has_id_column = false;
    bool first_row = true;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tokens;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) tokens.push_back(tok);
        if (tokens.empty()) continue;

        if (first_row) {
            double probe;
            has_id_column = !parse_double(tokens.front(), probe);
            first_row = false;
        }

        std::size_t start = 0;
        if (has_id_column) {
            ids.push_back(tokens.front());
            start = 1;
        }
        std::vector<double> row;
        row.reserve(tokens.size() - start);
        for (std::size_t t = start; t < tokens.size(); ++t) {
            double v;
            if (!parse_double(tokens[t], v))
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": malformed value '" +
                                         tokens[t] + "'");
            if (!std::isfinite(v))
                throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": non-finite value");
            row.push_back(v);
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) +
                                     ": dimension mismatch (expected " + std::to_string(rows.front().size()) +
                                     " columns)");
        rows.push_back(std::move(row));
    }
    if (rows.empty() || rows.front().empty()) throw std::runtime_error(path.string() + ": empty csv");

    EmbeddingCloud cloud;
    cloud.points.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            cloud.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    if (has_id_column) {
        cloud.ids = std::move(ids);
        check_unique_ids(cloud.ids);
    } else {
        cloud.ids.reserve(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) cloud.ids.push_back(std::to_string(i));
    }
    cloud.source = path.string();
    return cloud;
}

void save_csv(const EmbeddingCloud& cloud, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    char buf[64];
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
        for (Eigen::Index j = 0; j < cloud.dim(); ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g", cloud.points(i, j));
            if (j) f << ',';
            f << buf;
        }
        f << '\n';
    }
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace

void EmbeddingCloud::validate() const {
    if (rows() < 1 || dim() < 1) throw std::invalid_argument("cloud must have N >= 1, d >= 1");
    if (!points.allFinite()) throw std::invalid_argument("cloud contains non-finite values");
    if (static_cast<Eigen::Index>(ids.size()) != rows())
        throw std::invalid_argument("id count does not match row count");
    for (const auto& id : ids)
        if (id.find('\n') != std::string::npos) throw std::invalid_argument("id contains newline: " + id);
    check_unique_ids(ids);
}

std::string to_string(Family f) {
    switch (f) {
        case Family::A: return "A";
        case Family::B: return "B";
        case Family::C: return "C";
    }
    throw std::invalid_argument("bad family");
}

std::string to_string(Regime r) {
    switch (r) {
        case Regime::C1: return "C1";
        case Regime::C2: return "C2";
        case Regime::C3: return "C3";
        case Regime::C4: return "C4";
        case Regime::C5: return "C5";
    }
    throw std::invalid_argument("bad regime");
}

Family family_from_string(const std::string& s) {
    if (s == "A") return Family::A;
    if (s == "B") return Family::B;
    if (s == "C") return Family::C;
    throw std::invalid_argument("unknown family '" + s + "'");
}

Regime regime_from_string(const std::string& s) {
    if (s == "C1") return Regime::C1;
    if (s == "C2") return Regime::C2;
    if (s == "C3") return Regime::C3;
    if (s == "C4") return Regime::C4;
    if (s == "C5") return Regime::C5;
    throw std::invalid_argument("unknown regime '" + s + "'");
}

std::uint64_t binary_file_size(const EmbeddingCloud& cloud) {
    std::uint64_t size = 20;  // magic + version + N + d
    size += static_cast<std::uint64_t>(cloud.rows()) * static_cast<std::uint64_t>(cloud.dim()) * 4;
    for (const auto& id : cloud.ids) size += id.size() + 1;
    return size;
}

EmbeddingCloud load_embeddings(const std::filesystem::path& path, CloudFormat format) {
    EmbeddingCloud cloud = format == CloudFormat::binary ? load_binary(path) : load_csv(path);
    cloud.validate();
    return cloud;
}

void save_embeddings(const EmbeddingCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
    cloud.validate();
    if (format == CloudFormat::binary)
        save_binary(cloud, path);
    else
        save_csv(cloud, path);
}

LabeledCloud join_corpus_embeddings(const std::vector<CorpusRecord>& corpus, const EmbeddingCloud& cloud) {
    cloud.validate();
    if (corpus.size() != static_cast<std::size_t>(cloud.rows()))
        throw std::invalid_argument("corpus and cloud sizes differ (" + std::to_string(corpus.size()) + " vs " +
                                    std::to_string(cloud.rows()) + ")");
    std::unordered_map<std::string, Eigen::Index> row_of;
    row_of.reserve(cloud.ids.size());
    for (Eigen::Index i = 0; i < cloud.rows(); ++i) row_of.emplace(cloud.ids[i], i);

    LabeledCloud out;
    out.points.resize(cloud.rows(), cloud.dim());
    out.ids.reserve(corpus.size());
    out.slots.reserve(corpus.size());
    std::unordered_set<std::string> used;
    used.reserve(corpus.size());
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& rec = corpus[i];
        const auto it = row_of.find(rec.id);
        if (it == row_of.end()) throw std::invalid_argument("corpus id missing from cloud: " + rec.id);
        if (!used.insert(rec.id).second) throw std::invalid_argument("duplicate corpus id: " + rec.id);
        out.points.row(static_cast<Eigen::Index>(i)) = cloud.points.row(it->second);
        out.ids.push_back(rec.id);
        out.slots.push_back(rec.slots);
    }
    return out;
}

}  // namespace embgeom
