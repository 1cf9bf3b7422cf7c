#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "embgeom/corpus.hpp"

// httplib must follow the Eigen-bearing headers above
#include <httplib.h>
#include <json.hpp>

using namespace embgeom;
namespace fs = std::filesystem;

namespace {

std::string serialize(const std::vector<CorpusRecord>& records) {
    const fs::path path = fs::temp_directory_path() / "embgeom_corpus_ser.jsonl";
    write_corpus_jsonl(records, path);
    std::ifstream in(path, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// stub embedding server running on an ephemeral port
class StubServer {
public:
    explicit StubServer(httplib::Server::Handler handler) {
        server_.Post("/embed", std::move(handler));
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_) + "/embed"; }

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST_CASE("built-in template families are well-formed") {
    const auto& families = builtin_families();
    REQUIRE(families.size() == 3);
    for (const auto& family : families) {
        CHECK_NOTHROW(family.validate());
        for (int s = 0; s < 4; ++s) CHECK(family.slot_lists[static_cast<std::size_t>(s)].size() == 18);
    }
    CHECK(builtin_family(Family::A).slot_lists[0][0] == "said");
    CHECK(builtin_family(Family::C).anchors[1] == "regular");
    const auto& c2 = builtin_family(Family::C).slot_lists[1];
    CHECK(std::find(c2.begin(), c2.end(), "regular") != c2.end());

    // family B deliberately avoids lexical overlap between its slots
    const auto& b = builtin_family(Family::B);
    std::set<std::string> seen;
    for (const auto& list : b.slot_lists)
        for (const auto& word : list) CHECK(seen.insert(word).second);
}

TEST_CASE("regime specs") {
    CHECK(RegimeSpec::of(Regime::C1).cardinality() == 18);
    CHECK(RegimeSpec::of(Regime::C2).cardinality() == 18);
    CHECK(RegimeSpec::of(Regime::C3).cardinality() == 324);
    CHECK(RegimeSpec::of(Regime::C4).cardinality() == 5832);
    CHECK(RegimeSpec::of(Regime::C5).cardinality() == 104976);
    CHECK(RegimeSpec::of(Regime::C2).varying == std::vector<int>{1});
    CHECK(RegimeSpec::of(Regime::C4).varying == std::vector<int>{0, 1, 2});
}

TEST_CASE("single-slot enumeration matches the template rendering") {
    const auto records = enumerate_regime(builtin_family(Family::A), RegimeSpec::of(Regime::C1));
    REQUIRE(records.size() == 18);
    CHECK(records[0].slots[0] == "said");
    CHECK(records[0].sentence == "The minister said that the policy would bring benefits for citizens.");
    CHECK(records[0].id == "A-C1-0-1-0-0");  // anchor "policy" is entry 1 of slot 2
    CHECK(records[17].slots[0] == "revealed");
    for (const auto& rec : records) {
        CHECK(rec.slots[1] == "policy");
        CHECK(rec.slots[2] == "benefits");
        CHECK(rec.slots[3] == "citizens");
    }
}

TEST_CASE("two-slot enumeration keeps the anchors fixed") {
    const auto records = enumerate_regime(builtin_family(Family::B), RegimeSpec::of(Regime::C3));
    REQUIRE(records.size() == 324);
    for (const auto& rec : records) {
        CHECK(rec.slots[2] == "beginner");
        CHECK(rec.slots[3] == "introductory");
    }
    // odometer order: the second varying slot cycles fastest
    CHECK(records[0].slots[0] == "practical");
    CHECK(records[0].slots[1] == "guided");
    CHECK(records[1].slots[1] == "scaffolded");
    CHECK(records[18].slots[0] == "engaging");
}

TEST_CASE("cardinalities hold for all family and regime pairs") {
    for (Family f : {Family::A, Family::B, Family::C}) {
        for (Regime r : {Regime::C1, Regime::C2, Regime::C3, Regime::C4}) {
            const auto spec = RegimeSpec::of(r);
            CHECK(enumerate_regime(builtin_family(f), spec).size() == spec.cardinality());
        }
    }
}

TEST_CASE("full four-slot regime has unique combinations and exact counts") {
    std::size_t total = 0;
    for (Family f : {Family::A, Family::B, Family::C}) {
        const auto records = enumerate_regime(builtin_family(f), RegimeSpec::of(Regime::C5));
        CHECK(records.size() == 104976);
        total += records.size();
        if (f == Family::C) {
            std::set<std::array<std::string, 4>> combos;
            for (const auto& rec : records) combos.insert(rec.slots);
            CHECK(combos.size() == records.size());
        }
    }
    CHECK(total == 314928);
}

TEST_CASE("enumeration is byte-stable across calls") {
    const auto a = serialize(enumerate_regime(builtin_family(Family::A), RegimeSpec::of(Regime::C3)));
    const auto b = serialize(enumerate_regime(builtin_family(Family::A), RegimeSpec::of(Regime::C3)));
    CHECK(a == b);
    CHECK(!a.empty());
}

TEST_CASE("corpus jsonl round trip") {
    const auto records = enumerate_regime(builtin_family(Family::C), RegimeSpec::of(Regime::C1));
    const fs::path path = fs::temp_directory_path() / "embgeom_corpus_rt.jsonl";
    write_corpus_jsonl(records, path);
    const auto loaded = read_corpus_jsonl(path);
    REQUIRE(loaded.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(loaded[i].id == records[i].id);
        CHECK(loaded[i].family == records[i].family);
        CHECK(loaded[i].regime == records[i].regime);
        CHECK(loaded[i].slots == records[i].slots);
        CHECK(loaded[i].sentence == records[i].sentence);
    }
}

TEST_CASE("batch arithmetic") {
    CHECK(embed_batch_count(104976, 256) == 411);
    CHECK(embed_batch_count(10, 3) == 4);
    CHECK(embed_batch_count(9, 3) == 3);
    CHECK(embed_batch_count(1, 256) == 1);
    CHECK_THROWS(embed_batch_count(5, 0));
}

TEST_CASE("embedding service client") {
    SUBCASE("fixed four-dimensional stub") {
        StubServer server([](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json vectors = nlohmann::json::array();
            for (std::size_t i = 0; i < body.at("sentences").size(); ++i)
                vectors.push_back({0.1, 0.2, 0.3, 0.4});
            res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
        });
        EmbedServiceConfig config;
        config.endpoint = server.endpoint();
        config.batch_size = 1;
        const auto cloud = embed_via_service({"one sentence", "another sentence"}, config);
        CHECK(cloud.rows() == 2);
        CHECK(cloud.dim() == 4);
        CHECK(cloud.points(1, 3) == doctest::Approx(0.4));
    }
    SUBCASE("count mismatch is an error") {
        StubServer server([](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"vectors": [[1.0, 2.0]]})", "application/json");
        });
        EmbedServiceConfig config;
        config.endpoint = server.endpoint();
        config.batch_size = 8;
        CHECK_THROWS(embed_via_service({"a", "b"}, config));
    }
    SUBCASE("dimension inconsistency across batches is an error") {
        StubServer server([](const httplib::Request& req, httplib::Response& res) {
            const auto body = nlohmann::json::parse(req.body);
            const std::string& first = body.at("sentences").at(0).get_ref<const std::string&>();
            nlohmann::json vec = first == "a" ? nlohmann::json{1.0, 2.0} : nlohmann::json{1.0, 2.0, 3.0};
            res.set_content(nlohmann::json{{"vectors", {vec}}}.dump(), "application/json");
        });
        EmbedServiceConfig config;
        config.endpoint = server.endpoint();
        config.batch_size = 1;
        config.max_in_flight = 1;
        CHECK_THROWS(embed_via_service({"a", "b"}, config));
    }
    SUBCASE("transient failures are retried with order preserved") {
        auto failures = std::make_shared<std::atomic<int>>(0);
        StubServer server([failures](const httplib::Request& req, httplib::Response& res) {
            if (failures->fetch_add(1) < 2) {
                res.status = 503;
                return;
            }
            const auto body = nlohmann::json::parse(req.body);
            nlohmann::json vectors = nlohmann::json::array();
            for (const auto& s : body.at("sentences"))
                vectors.push_back({static_cast<double>(s.get_ref<const std::string&>().size()), 0.0});
            res.set_content(nlohmann::json{{"vectors", vectors}}.dump(), "application/json");
        });
        EmbedServiceConfig config;
        config.endpoint = server.endpoint();
        config.batch_size = 2;
        config.max_in_flight = 1;
        const auto cloud = embed_via_service({"a", "bb", "ccc"}, config);
        CHECK(cloud.rows() == 3);
        CHECK(cloud.points(0, 0) == doctest::Approx(1.0));
        CHECK(cloud.points(2, 0) == doctest::Approx(3.0));
    }
    SUBCASE("permanent failure raises after no retries") {
        StubServer server([](const httplib::Request&, httplib::Response& res) { res.status = 404; });
        EmbedServiceConfig config;
        config.endpoint = server.endpoint();
        CHECK_THROWS(embed_via_service({"a"}, config));
    }
    SUBCASE("endpoint parsing rejects non-http urls") {
        EmbedServiceConfig config;
        config.endpoint = "ftp://example.com";
        CHECK_THROWS(embed_via_service({"a"}, config));
    }
}
