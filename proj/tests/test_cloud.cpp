#include <doctest.h>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "embgeom/cloud.hpp"
#include "embgeom/rng.hpp"

using namespace embgeom;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "embgeom_test_cloud";
    fs::create_directories(dir);
    return dir / name;
}

EmbeddingCloud random_cloud(int n, int d, std::uint64_t seed) {
    RandomStream rng(seed);
    EmbeddingCloud cloud;
    cloud.points.resize(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j)
            cloud.points(i, j) = static_cast<double>(static_cast<float>(rng.normal()));  // f32-representable
    for (int i = 0; i < n; ++i) cloud.ids.push_back("id-" + std::to_string(i));
    cloud.source = "test";
    return cloud;
}

// hand-assembled binary file, independent of the save path
std::string assemble_binary(std::uint64_t n, std::uint32_t d, const std::vector<float>& values,
                            const std::vector<std::string>& ids) {
    std::string out = "CPGE";
    const auto put32 = [&](std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    };
    put32(1);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((n >> (8 * i)) & 0xFF));
    put32(d);
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        put32(bits);
    }
    for (const auto& id : ids) {
        out += id;
        out.push_back('\n');
    }
    return out;
}

void write_bytes(const fs::path& path, const std::string& bytes) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace

TEST_CASE("binary round trip is the identity on points, ids and dimension") {
    const auto cloud = random_cloud(23, 7, 42);
    const auto path = temp_file("roundtrip.bin");
    save_embeddings(cloud, path, CloudFormat::binary);
    const auto loaded = load_embeddings(path, CloudFormat::binary);
    CHECK(loaded.rows() == cloud.rows());
    CHECK(loaded.dim() == cloud.dim());
    CHECK(loaded.ids == cloud.ids);
    CHECK((loaded.points.array() == cloud.points.array()).all());

    // saving the loaded cloud reproduces the file byte for byte
    const auto path2 = temp_file("roundtrip2.bin");
    save_embeddings(loaded, path2, CloudFormat::binary);
    std::ifstream a(path, std::ios::binary), b(path2, std::ios::binary);
    const std::string bytes_a((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
    const std::string bytes_b((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
    CHECK(bytes_a == bytes_b);
}

TEST_CASE("hand-assembled binary file loads with rows preserved") {
    const auto path = temp_file("manual.bin");
    write_bytes(path, assemble_binary(3, 2, {0.f, 0.f, 1.f, 0.f, 0.f, 1.f}, {"a", "b", "c"}));
    const auto cloud = load_embeddings(path, CloudFormat::binary);
    CHECK(cloud.rows() == 3);
    CHECK(cloud.dim() == 2);
    CHECK(cloud.points(1, 0) == 1.0);
    CHECK(cloud.points(2, 1) == 1.0);
    CHECK(cloud.ids == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("binary file size follows the format layout") {
    const auto cloud = random_cloud(1, 768, 7);
    const auto path = temp_file("size.bin");
    save_embeddings(cloud, path, CloudFormat::binary);
    std::uint64_t ids_bytes = 0;
    for (const auto& id : cloud.ids) ids_bytes += id.size() + 1;
    CHECK(fs::file_size(path) == 20 + 768 * 4 + ids_bytes);
    CHECK(binary_file_size(cloud) == fs::file_size(path));
}

TEST_CASE("binary loader rejects malformed input") {
    SUBCASE("bad magic") {
        const auto path = temp_file("badmagic.bin");
        auto bytes = assemble_binary(1, 1, {1.f}, {"a"});
        bytes[0] = 'X';
        write_bytes(path, bytes);
        CHECK_THROWS(load_embeddings(path, CloudFormat::binary));
    }
    SUBCASE("payload shorter than header promises") {
        const auto path = temp_file("short.bin");
        auto bytes = assemble_binary(2, 2, {1.f, 2.f, 3.f, 4.f}, {"a", "b"});
        write_bytes(path, bytes.substr(0, 24));
        CHECK_THROWS(load_embeddings(path, CloudFormat::binary));
    }
    SUBCASE("missing ids") {
        const auto path = temp_file("noids.bin");
        write_bytes(path, assemble_binary(2, 1, {1.f, 2.f}, {"a"}));
        CHECK_THROWS(load_embeddings(path, CloudFormat::binary));
    }
    SUBCASE("trailing bytes") {
        const auto path = temp_file("trailing.bin");
        write_bytes(path, assemble_binary(1, 1, {1.f}, {"a"}) + "junk");
        CHECK_THROWS(load_embeddings(path, CloudFormat::binary));
    }
    SUBCASE("duplicate ids") {
        const auto path = temp_file("dup.bin");
        write_bytes(path, assemble_binary(2, 1, {1.f, 2.f}, {"a", "a"}));
        CHECK_THROWS(load_embeddings(path, CloudFormat::binary));
    }
    SUBCASE("non-finite value") {
        const auto path = temp_file("nan.bin");
        write_bytes(path, assemble_binary(1, 1, {std::numeric_limits<float>::quiet_NaN()}, {"a"}));
        CHECK_THROWS(load_embeddings(path, CloudFormat::binary));
    }
}

TEST_CASE("csv loader") {
    SUBCASE("plain rows") {
        const auto path = temp_file("plain.csv");
        write_bytes(path, "1.0,2.0\n3.0,4.0\n");
        const auto cloud = load_embeddings(path, CloudFormat::csv);
        CHECK(cloud.rows() == 2);
        CHECK(cloud.dim() == 2);
        CHECK(cloud.points(1, 1) == 4.0);
    }
    SUBCASE("leading id column detected by non-numeric first token") {
        const auto path = temp_file("ids.csv");
        write_bytes(path, "alpha,1.0,2.0\nbeta,3.0,4.0\n");
        const auto cloud = load_embeddings(path, CloudFormat::csv);
        CHECK(cloud.dim() == 2);
        CHECK(cloud.ids == std::vector<std::string>{"alpha", "beta"});
    }
    SUBCASE("non-finite value rejected") {
        const auto path = temp_file("nan.csv");
        write_bytes(path, "1.0,nan\n");
        CHECK_THROWS(load_embeddings(path, CloudFormat::csv));
    }
    SUBCASE("ragged rows rejected") {
        const auto path = temp_file("ragged.csv");
        write_bytes(path, "1.0,2.0\n3.0\n");
        CHECK_THROWS(load_embeddings(path, CloudFormat::csv));
    }
    SUBCASE("csv round trip preserves values within text representation") {
        const auto cloud = random_cloud(5, 3, 99);
        const auto path = temp_file("rt.csv");
        save_embeddings(cloud, path, CloudFormat::csv);
        const auto loaded = load_embeddings(path, CloudFormat::csv);
        CHECK((loaded.points - cloud.points).cwiseAbs().maxCoeff() == 0.0);  // %.17g is exact for doubles
    }
}

TEST_CASE("saving to an unwritable destination fails") {
    const auto cloud = random_cloud(2, 2, 1);
    CHECK_THROWS(save_embeddings(cloud, "/nonexistent-dir/cloud.bin", CloudFormat::binary));
}

TEST_CASE("cloud validation") {
    EmbeddingCloud cloud = random_cloud(3, 2, 5);
    SUBCASE("valid cloud passes") { CHECK_NOTHROW(cloud.validate()); }
    SUBCASE("id count mismatch") {
        cloud.ids.pop_back();
        CHECK_THROWS(cloud.validate());
    }
    SUBCASE("duplicate ids") {
        cloud.ids[1] = cloud.ids[0];
        CHECK_THROWS(cloud.validate());
    }
    SUBCASE("newline in id") {
        cloud.ids[0] = "bad\nid";
        CHECK_THROWS(cloud.validate());
    }
    SUBCASE("non-finite point") {
        cloud.points(0, 0) = std::numeric_limits<double>::infinity();
        CHECK_THROWS(cloud.validate());
    }
}

TEST_CASE("join of corpus and embeddings") {
    EmbeddingCloud cloud = random_cloud(2, 3, 11);
    cloud.ids = {"x", "y"};
    std::vector<CorpusRecord> corpus(2);
    corpus[0].id = "y";
    corpus[0].slots = {"a", "b", "c", "d"};
    corpus[1].id = "x";
    corpus[1].slots = {"e", "f", "g", "h"};

    SUBCASE("matching ids join in corpus order") {
        const auto labeled = join_corpus_embeddings(corpus, cloud);
        CHECK(labeled.rows() == 2);
        CHECK(labeled.ids == std::vector<std::string>{"y", "x"});
        CHECK((labeled.points.row(0).array() == cloud.points.row(1).array()).all());
        CHECK(labeled.slots[1][0] == "e");
    }
    SUBCASE("corpus id missing from cloud") {
        corpus[0].id = "z";
        CHECK_THROWS(join_corpus_embeddings(corpus, cloud));
    }
    SUBCASE("size mismatch") {
        corpus.pop_back();
        CHECK_THROWS(join_corpus_embeddings(corpus, cloud));
    }
}
