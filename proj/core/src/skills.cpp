#include "mera/skills.hpp"

#include <sodium.h>

#include <algorithm>
#include <array>
#include <fstream>
#include <map>
#include <sstream>
#include <tuple>

#include "mera/error.hpp"

namespace mera {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

auto unit_text(std::string const& source, int start_line, int end_line) -> std::string {
    std::istringstream in{source};
    std::string line;
    std::string out;
    for (int n = 1; std::getline(in, line); ++n) {
        if (n >= start_line && n <= end_line) {
            out += line;
            out += '\n';
        }
    }
    return out;
}

/// Ordering key: smaller sorts first.
auto rank_key(SkillRecord const& s, std::string const& family) {
    return std::make_tuple(s.families.contains(family) ? 0 : 1, -s.success_ratio(),
                           s.quarantined ? 1 : 0, -s.last_used_ms, s.hash);
}

}  // namespace

auto skill_hash(std::string const& canonical_dump) -> std::string {
    static bool const ready = sodium_init() >= 0;
    if (!ready) {
        throw Error{ErrorCode::InvalidConfig, "libsodium failed to initialize"};
    }
    std::array<unsigned char, 32> digest{};
    crypto_generichash(digest.data(), digest.size(),
                       reinterpret_cast<unsigned char const*>(canonical_dump.data()),
                       canonical_dump.size(), nullptr, 0);
    std::array<char, 65> hex{};
    sodium_bin2hex(hex.data(), hex.size(), digest.data(), digest.size());
    return std::string{hex.data(), 64};
}

auto SkillRecord::success_ratio() const -> double {
    return static_cast<double>(n_succ) / static_cast<double>(std::max<std::int64_t>(1, n_offered));
}

void to_json(json& j, SkillRecord const& s) {
    j = json{{"hash", s.hash},
             {"canonical_body", s.canonical_body},
             {"qualified_name", s.qualified_name},
             {"params", s.params},
             {"source", s.source},
             {"families", s.families},
             {"n_offered", s.n_offered},
             {"n_succ", s.n_succ},
             {"quarantined", s.quarantined},
             {"last_used_ms", s.last_used_ms}};
}

void from_json(json const& j, SkillRecord& s) {
    s.hash = j.at("hash").get<std::string>();
    s.canonical_body = j.at("canonical_body").get<std::string>();
    s.qualified_name = j.at("qualified_name").get<std::string>();
    s.params = j.at("params").get<std::vector<std::string>>();
    s.source = j.value("source", std::string{});
    s.families = j.at("families").get<std::set<std::string>>();
    s.n_offered = j.at("n_offered").get<std::int64_t>();
    s.n_succ = j.at("n_succ").get<std::int64_t>();
    s.quarantined = j.at("quarantined").get<bool>();
    s.last_used_ms = j.at("last_used_ms").get<std::int64_t>();
}

auto extract_skills(std::string const& accepted_source, std::string const& family,
                    Analyzer& analyzer, std::int64_t now_ms) -> std::vector<SkillRecord> {
    auto const dumps = analyzer.canonical_dumps(accepted_source);
    std::map<std::string, CodeUnit> units;
    for (auto& u : analyzer.units(accepted_source)) {
        units.emplace(u.qualified_name, std::move(u));
    }
    std::vector<SkillRecord> out;
    for (auto const& d : dumps) {
        SkillRecord s;
        s.hash = skill_hash(d.dump);
        s.canonical_body = d.dump;
        s.qualified_name = d.qualified_name;
        if (auto it = units.find(d.qualified_name); it != units.end()) {
            s.params = it->second.params;
            s.source = unit_text(accepted_source, it->second.start_line, it->second.end_line);
        }
        s.families = {family};
        s.last_used_ms = now_ms;
        out.push_back(std::move(s));
    }
    return out;
}

auto SkillLibrary::find(std::string const& hash) const -> SkillRecord const* {
    auto it = std::find_if(skills_.begin(), skills_.end(),
                           [&](auto const& s) { return s.hash == hash; });
    return it == skills_.end() ? nullptr : &*it;
}

auto SkillLibrary::find_mutable(std::string const& hash) -> SkillRecord* {
    return const_cast<SkillRecord*>(std::as_const(*this).find(hash));
}

auto SkillLibrary::harvest(std::string const& accepted_source, std::string const& family,
                           Analyzer& analyzer, std::int64_t now_ms) -> std::vector<SkillRecord> {
    auto records = extract_skills(accepted_source, family, analyzer, now_ms);
    for (auto const& r : records) {
        add(r);
    }
    return records;
}

void SkillLibrary::add(SkillRecord record) {
    if (auto* existing = find_mutable(record.hash)) {
        existing->families.insert(record.families.begin(), record.families.end());
        existing->last_used_ms = std::max(existing->last_used_ms, record.last_used_ms);
        return;
    }
    skills_.push_back(std::move(record));
    enforce_cap();
}

void SkillLibrary::enforce_cap() {
    while (skills_.size() > cap_) {
        auto victim_key = [](SkillRecord const& s) {
            bool const disposable = s.quarantined && s.n_succ == 0;
            return std::make_tuple(disposable ? 0 : 1, s.last_used_ms, s.hash);
        };
        auto victim = std::min_element(skills_.begin(), skills_.end(), [&](auto const& a, auto const& b) {
            return victim_key(a) < victim_key(b);
        });
        skills_.erase(victim);
    }
}

auto SkillLibrary::select(std::string const& family, std::size_t k, std::int64_t now_ms)
    -> std::vector<SkillRecord> {
    if (skills_.empty()) {
        throw Error{ErrorCode::EmptyLibrary, "skill library is empty"};
    }
    std::vector<SkillRecord*> order;
    for (auto& s : skills_) {
        order.push_back(&s);
    }
    std::sort(order.begin(), order.end(), [&](SkillRecord const* a, SkillRecord const* b) {
        return rank_key(*a, family) < rank_key(*b, family);
    });
    order.resize(std::min(order.size(), k));
    std::vector<SkillRecord> out;
    for (auto* s : order) {
        ++s->n_offered;
        s->last_used_ms = std::max(s->last_used_ms, now_ms);
        out.push_back(*s);
    }
    return out;
}

void SkillLibrary::record_outcome(std::vector<std::string> const& offered_hashes, bool accepted) {
    if (!accepted) {
        return;
    }
    for (auto const& h : offered_hashes) {
        // A hash that was never offered cannot earn credit.
        if (auto* s = find_mutable(h); s != nullptr && s->n_offered > 0) {
            s->n_succ = std::min(s->n_succ + 1, s->n_offered);
            s->quarantined = false;
        }
    }
}

void SkillLibrary::save(fs::path const& file) const {
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    auto const tmp = file.string() + ".tmp";
    {
        std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
        for (auto const& s : skills_) {
            out << json(s).dump() << '\n';
        }
        if (!out.flush()) {
            throw Error{ErrorCode::StorageFailure, "cannot write " + tmp};
        }
    }
    fs::rename(tmp, file);
}

void SkillLibrary::load(fs::path const& file) {
    skills_.clear();
    std::ifstream in{file, std::ios::binary};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            skills_.push_back(json::parse(line).get<SkillRecord>());
        } catch (json::exception const& e) {
            throw Error{ErrorCode::StorageFailure, file.string() + ": " + e.what()};
        }
    }
}

}  // namespace mera
