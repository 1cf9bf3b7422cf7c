#include "embgeom/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include <json.hpp>

namespace embgeom {

namespace {

using nlohmann::json;

TemplateFamily make_family_a() {
    TemplateFamily f;
    f.name = Family::A;
    f.pattern = "The minister {} that the {} would bring {} for {}.";
    f.slot_lists[0] = {"said", "stated", "announced", "declared", "reported", "mentioned", "noted", "remarked",
                       "observed", "explained", "confirmed", "indicated", "emphasized", "stressed", "asserted",
                       "claimed", "communicated", "revealed"};
    f.slot_lists[1] = {"reform", "policy", "measure", "initiative", "program", "plan", "proposal", "strategy",
                       "scheme", "package", "project", "framework", "regulation", "decision", "action", "change",
                       "legislation", "agreement"};
    f.slot_lists[2] = {"benefits", "advantages", "gains", "improvements", "support", "relief", "opportunities",
                       "resources", "protections", "assistance", "enhancements", "incentives", "savings",
                       "efficiency gains", "better outcomes", "new opportunities", "additional support",
                       "long-term benefits"};
    f.slot_lists[3] = {"citizens", "residents", "families", "households", "communities", "students", "workers",
                       "teachers", "patients", "parents", "children", "consumers", "commuters", "farmers",
                       "taxpayers", "businesses", "young people", "older adults"};
    f.anchors = {"said", "policy", "benefits", "citizens"};
    return f;
}

TemplateFamily make_family_b() {
    TemplateFamily f;
    f.name = Family::B;
    f.pattern = "The teacher designed a {} lesson with {} exercises for {} students in a {} course.";
    f.slot_lists[0] = {"practical", "engaging", "interactive", "applied", "focused", "dynamic", "coherent",
                       "organized", "stimulating", "accessible", "well-paced", "informative", "balanced",
                       "classroom-based", "skill-oriented", "thoughtful", "structured", "motivating"};
    f.slot_lists[1] = {"guided", "scaffolded", "targeted", "incremental", "hands-on", "practice-based",
                       "reinforcing", "diagnostic", "collaborative", "independent", "reflective", "contextual",
                       "problem-solving", "stepwise", "graded", "varied", "follow-up", "manageable"};
    f.slot_lists[2] = {"beginner", "novice", "entry-level", "less-experienced", "newly enrolled", "first-year",
                       "junior", "early-stage", "foundation-level", "developing", "emerging", "inexperienced",
                       "starting", "lower-level", "pre-intermediate", "first-term", "introductory-level",
                       "initial-stage"};
    f.slot_lists[3] = {"introductory", "foundational", "elementary", "basic", "preparatory", "survey", "core",
                       "entry-course", "lower-division", "initial", "starting-level", "general", "primer",
                       "baseline", "bridge", "orientation", "gateway", "first-cycle"};
    f.anchors = {"practical", "guided", "beginner", "introductory"};
    return f;
}

TemplateFamily make_family_c() {
    TemplateFamily f;
    f.name = Family::C;
    f.pattern = "The doctor recommended a {} treatment with {} monitoring for {} patients during {} recovery.";
    f.slot_lists[0] = {"conservative", "targeted", "supportive", "individualized", "stepwise", "noninvasive",
                       "standard", "evidence-based", "supervised", "outpatient", "low-intensity", "short-term",
                       "structured", "moderate", "symptom-focused", "regimen-based", "gradual", "protocol-driven"};
    f.slot_lists[1] = {"regular", "continuous", "close", "periodic", "ongoing", "systematic", "daily", "weekly",
                       "scheduled", "attentive", "remote", "clinical", "proactive", "routine", "longitudinal",
                       "bedside", "sensor-based", "post-discharge"};
    f.slot_lists[2] = {"adult", "elderly", "vulnerable", "high-risk", "postoperative", "chronic", "ambulatory",
                       "frail", "stable", "symptomatic", "referred", "monitored", "at-risk", "immunocompromised",
                       "long-term-care", "recovering", "geriatric", "working-age"};
    f.slot_lists[3] = {"early", "initial", "gradual", "assisted", "home-based", "extended", "planned", "safe",
                       "partial", "staged", "steady", "prolonged", "post-acute", "supported", "late-phase",
                       "convalescent", "rehabilitative", "stabilizing"};
    f.anchors = {"conservative", "regular", "adult", "early"};
    return f;
}

}  // namespace

void TemplateFamily::validate() const {
    std::size_t placeholders = 0;
    for (std::size_t pos = 0; (pos = pattern.find("{}", pos)) != std::string::npos; pos += 2) ++placeholders;
    if (placeholders != 4) throw std::invalid_argument("TemplateFamily: pattern must contain exactly four slots");
    for (int s = 0; s < 4; ++s) {
        if (slot_lists[s].size() != 18)
            throw std::invalid_argument("TemplateFamily: slot " + std::to_string(s + 1) + " must list 18 variants");
        std::unordered_set<std::string> unique(slot_lists[s].begin(), slot_lists[s].end());
        if (unique.size() != 18)
            throw std::invalid_argument("TemplateFamily: slot " + std::to_string(s + 1) + " has duplicates");
        if (std::find(slot_lists[s].begin(), slot_lists[s].end(), anchors[s]) == slot_lists[s].end())
            throw std::invalid_argument("TemplateFamily: anchor for slot " + std::to_string(s + 1) +
                                        " is not a member of its list");
    }
}

int TemplateFamily::anchor_index(int slot) const {
    const auto& list = slot_lists.at(static_cast<std::size_t>(slot));
    const auto it = std::find(list.begin(), list.end(), anchors.at(static_cast<std::size_t>(slot)));
    if (it == list.end()) throw std::logic_error("anchor not in slot list");
    return static_cast<int>(it - list.begin());
}

std::string TemplateFamily::render(const std::array<std::string, 4>& slots) const {
    std::string out;
    out.reserve(pattern.size() + 64);
    std::size_t pos = 0;
    for (int s = 0; s < 4; ++s) {
        const std::size_t hole = pattern.find("{}", pos);
        if (hole == std::string::npos) throw std::logic_error("pattern has fewer than four slots");
        out.append(pattern, pos, hole - pos);
        out.append(slots[static_cast<std::size_t>(s)]);
        pos = hole + 2;
    }
    out.append(pattern, pos, std::string::npos);
    return out;
}

RegimeSpec RegimeSpec::of(Regime r) {
    switch (r) {
        case Regime::C1: return {r, {0}};
        case Regime::C2: return {r, {1}};
        case Regime::C3: return {r, {0, 1}};
        case Regime::C4: return {r, {0, 1, 2}};
        case Regime::C5: return {r, {0, 1, 2, 3}};
    }
    throw std::invalid_argument("bad regime");
}

std::uint64_t RegimeSpec::cardinality() const {
    std::uint64_t n = 1;
    for (std::size_t i = 0; i < varying.size(); ++i) n *= 18;
    return n;
}

const std::vector<TemplateFamily>& builtin_families() {
    static const std::vector<TemplateFamily> families = [] {
        std::vector<TemplateFamily> fs{make_family_a(), make_family_b(), make_family_c()};
        for (const auto& f : fs) f.validate();
        return fs;
    }();
    return families;
}

const TemplateFamily& builtin_family(Family f) {
    return builtin_families().at(static_cast<std::size_t>(f));
}

std::vector<CorpusRecord> enumerate_regime(const TemplateFamily& family, const RegimeSpec& regime) {
    family.validate();
    for (int slot : regime.varying)
        if (slot < 0 || slot > 3) throw std::invalid_argument("enumerate_regime: bad varying slot");

    std::array<int, 4> indices{};
    for (int s = 0; s < 4; ++s) indices[static_cast<std::size_t>(s)] = family.anchor_index(s);

    std::vector<CorpusRecord> records;
    records.reserve(regime.cardinality());
    const auto emit = [&] {
        CorpusRecord rec;
        rec.family = family.name;
        rec.regime = regime.regime;
        for (int s = 0; s < 4; ++s)
            rec.slots[static_cast<std::size_t>(s)] =
                family.slot_lists[static_cast<std::size_t>(s)][static_cast<std::size_t>(indices[static_cast<std::size_t>(s)])];
        rec.sentence = family.render(rec.slots);
        rec.id = to_string(family.name) + "-" + to_string(regime.regime);
        for (int s = 0; s < 4; ++s) rec.id += "-" + std::to_string(indices[static_cast<std::size_t>(s)]);
        records.push_back(std::move(rec));
    };

    // odometer: last varying slot cycles fastest
    const auto total = regime.cardinality();
    for (std::uint64_t counter = 0; counter < total; ++counter) {
        std::uint64_t rest = counter;
        for (std::size_t v = regime.varying.size(); v-- > 0;) {
            indices[static_cast<std::size_t>(regime.varying[v])] = static_cast<int>(rest % 18);
            rest /= 18;
        }
        emit();
    }
    return records;
}

void write_corpus_jsonl(const std::vector<CorpusRecord>& records, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    for (const auto& rec : records) {
        json j{{"id", rec.id},
               {"family", to_string(rec.family)},
               {"regime", to_string(rec.regime)},
               {"slots",
                {{"s1", rec.slots[0]}, {"s2", rec.slots[1]}, {"s3", rec.slots[2]}, {"s4", rec.slots[3]}}},
               {"sentence", rec.sentence}};
        out << j.dump() << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::vector<CorpusRecord> read_corpus_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::vector<CorpusRecord> records;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        }
        CorpusRecord rec;
        rec.id = j.at("id").get<std::string>();
        rec.family = family_from_string(j.at("family").get<std::string>());
        rec.regime = regime_from_string(j.at("regime").get<std::string>());
        const auto& slots = j.at("slots");
        rec.slots = {slots.at("s1").get<std::string>(), slots.at("s2").get<std::string>(),
                     slots.at("s3").get<std::string>(), slots.at("s4").get<std::string>()};
        rec.sentence = j.at("sentence").get<std::string>();
        records.push_back(std::move(rec));
    }
    return records;
}

std::size_t embed_batch_count(std::size_t n_sentences, std::size_t batch_size) {
    if (batch_size == 0) throw std::invalid_argument("embed_batch_count: batch_size must be positive");
    return (n_sentences + batch_size - 1) / batch_size;
}

}  // namespace embgeom
