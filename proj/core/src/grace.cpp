#include "mera/grace.hpp"

#include <algorithm>
#include <fstream>
#include <regex>
#include <set>
#include <tuple>

#include "mera/error.hpp"
#include "mera/prompt.hpp"
#include "mera/skills.hpp"

namespace mera {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

auto top_kinds(std::map<std::string, int> const& kinds, std::size_t n) -> std::string {
    std::vector<std::pair<std::string, int>> v(kinds.begin(), kinds.end());
    std::stable_sort(v.begin(), v.end(), [](auto const& a, auto const& b) { return a.second > b.second; });
    std::string out;
    for (std::size_t i = 0; i < v.size() && i < n; ++i) {
        if (!out.empty()) {
            out += ", ";
        }
        out += v[i].first;
        if (v[i].second > 1) {
            out += " x" + std::to_string(v[i].second);
        }
    }
    return out;
}

auto clip_text(std::string text) -> std::string {
    if (text.size() > kHintTextLimit) {
        text.resize(kHintTextLimit);
    }
    return text;
}

auto failure_from(json const& j, char const* key) -> FailureClass {
    auto f = failure_class_from_string(j.at(key).get<std::string>());
    if (!f) {
        throw Error{ErrorCode::ParseFailure, std::string{"bad failure class in "} + key};
    }
    return *f;
}

}  // namespace

void GraceConfig::validate() const {
    if (delta_progress < 0 || delta_score < 0 || !(rho >= 0.0 && rho <= 1.0) || top_k < 1 ||
        hint_ttl < 0) {
        throw Error{ErrorCode::InvalidConfig, "invalid GRACE configuration"};
    }
}

auto RepairOperator::success_ratio() const -> double {
    return n_offered > 0 ? static_cast<double>(n_succ_offered) / static_cast<double>(n_offered) : 0.0;
}

void to_json(json& j, RepairOperator const& op) {
    j = json{{"id", op.id},
             {"from_failure", to_string(op.from_failure)},
             {"to_failure", to_string(op.to_failure)},
             {"added_kinds", op.added_kinds},
             {"removed_kinds", op.removed_kinds},
             {"hint_text", op.hint_text},
             {"progress_gain", op.progress_gain},
             {"n_offered", op.n_offered},
             {"n_succ_offered", op.n_succ_offered},
             {"created_ms", op.created_ms}};
}

void from_json(json const& j, RepairOperator& op) {
    op.id = j.at("id").get<std::string>();
    op.from_failure = failure_from(j, "from_failure");
    op.to_failure = failure_from(j, "to_failure");
    op.added_kinds = j.at("added_kinds").get<std::map<std::string, int>>();
    op.removed_kinds = j.at("removed_kinds").get<std::map<std::string, int>>();
    op.hint_text = j.at("hint_text").get<std::string>();
    op.progress_gain = j.value("progress_gain", 0);
    op.n_offered = j.at("n_offered").get<std::int64_t>();
    op.n_succ_offered = j.at("n_succ_offered").get<std::int64_t>();
    op.created_ms = j.value("created_ms", std::int64_t{0});
}

auto consolidation_gate(GraceConfig const& cfg, bool accepted, int passed, int passed_prev,
                        int score, int score_prev) -> bool {
    if (accepted) {
        return true;
    }
    if (passed - passed_prev >= cfg.delta_progress && score >= score_prev) {
        return true;
    }
    return score - score_prev >= cfg.delta_score && passed >= passed_prev;
}

auto derive_operator(std::string const& prev_source, std::string const& curr_source,
                     FailureClass prev_failure, FailureClass curr_failure, int progress_gain,
                     Analyzer& analyzer, std::int64_t now_ms) -> RepairOperator {
    auto const diff = analyzer.ast_diff(prev_source, curr_source);
    RepairOperator op;
    op.from_failure = prev_failure;
    op.to_failure = curr_failure;
    op.added_kinds = diff.added;
    op.removed_kinds = diff.removed;
    op.progress_gain = progress_gain;
    op.created_ms = now_ms;
    json const identity = {{"from", to_string(prev_failure)},
                           {"to", to_string(curr_failure)},
                           {"added", diff.added},
                           {"removed", diff.removed}};
    op.id = "op-" + skill_hash(identity.dump()).substr(0, 16);
    std::string text = "when " + std::string{to_string(prev_failure)} + ", changes ";
    if (!diff.added.empty()) {
        text += "adding " + top_kinds(diff.added, 3);
    } else {
        text += "removing " + top_kinds(diff.removed, 3);
    }
    text += " preceded " + std::string{to_string(curr_failure)};
    op.hint_text = clip_text(std::move(text));
    return op;
}

auto operator_eligibility(GraceConfig const& cfg, RepairOperator const& op,
                          FailureClass current_failure) -> bool {
    if (op.n_offered > 0) {
        return op.success_ratio() >= cfg.rho;
    }
    return cfg.bootstrap_enabled && op.from_failure == current_failure &&
           op.progress_gain >= cfg.delta_progress;
}

auto derive_gap_hints(std::string const& response, std::string const& code, int attempt, int ttl)
    -> std::vector<GapHint> {
    auto const prose = prose_outside_fences(response);
    static std::regex const call_form{R"(`([A-Za-z_][A-Za-z0-9_]*)\([^`]*\)`)"};
    static std::regex const named{R"(\b(?:function|method|def)\s+`?([A-Za-z_][A-Za-z0-9_]*)`?)"};
    std::vector<std::string> promised;
    std::set<std::string> seen;
    for (auto const* re : {&call_form, &named}) {
        for (std::sregex_iterator it{prose.begin(), prose.end(), *re}, end; it != end; ++it) {
            auto name = (*it)[1].str();
            if (seen.insert(name).second) {
                promised.push_back(std::move(name));
            }
        }
    }
    std::vector<GapHint> hints;
    for (auto const& name : promised) {
        std::regex const defined{R"((^|\n)\s*(def|class)\s+)" + name + R"(\b)"};
        if (!std::regex_search(code, defined)) {
            hints.push_back({clip_text("the previous response describes '" + name +
                                       "' but the code does not define it"),
                             attempt, ttl});
        }
    }
    return hints;
}

auto OperatorStore::add(RepairOperator op) -> bool {
    if (op.added_kinds.empty() && op.removed_kinds.empty()) {
        return false;
    }
    if (find(op.id) != nullptr) {
        return false;
    }
    ops_.push_back(std::move(op));
    return true;
}

auto OperatorStore::find(std::string const& id) const -> RepairOperator const* {
    auto it = std::find_if(ops_.begin(), ops_.end(), [&](auto const& op) { return op.id == id; });
    return it == ops_.end() ? nullptr : &*it;
}

auto OperatorStore::compose_guidance(GraceConfig const& cfg, FailureClass previous_failure,
                                     std::vector<GapHint> const& hints)
    -> std::vector<GuidanceBlock> {
    std::vector<RepairOperator*> eligible;
    for (auto& op : ops_) {
        if (op.from_failure == previous_failure && operator_eligibility(cfg, op, previous_failure)) {
            eligible.push_back(&op);
        }
    }
    std::sort(eligible.begin(), eligible.end(), [](RepairOperator const* a, RepairOperator const* b) {
        return std::make_tuple(-a->success_ratio(), -a->created_ms, a->id) <
               std::make_tuple(-b->success_ratio(), -b->created_ms, b->id);
    });
    std::vector<GuidanceBlock> out;
    for (std::size_t i = 0; i < eligible.size() && i < cfg.top_k; ++i) {
        ++eligible[i]->n_offered;
        out.push_back({eligible[i]->hint_text, eligible[i]->id});
    }
    for (auto const& h : hints) {
        if (h.ttl > 0) {
            out.push_back({h.text, {}});
        }
    }
    return out;
}

void OperatorStore::record_outcome(std::vector<std::string> const& offered_ids, bool accepted) {
    if (!accepted) {
        return;
    }
    for (auto& op : ops_) {
        if (std::find(offered_ids.begin(), offered_ids.end(), op.id) != offered_ids.end()) {
            op.n_succ_offered = std::min(op.n_succ_offered + 1, op.n_offered);
        }
    }
}

void OperatorStore::save(fs::path const& file) const {
    if (file.has_parent_path()) {
        fs::create_directories(file.parent_path());
    }
    auto const tmp = file.string() + ".tmp";
    {
        std::ofstream out{tmp, std::ios::binary | std::ios::trunc};
        for (auto const& op : ops_) {
            out << json(op).dump() << '\n';
        }
        if (!out.flush()) {
            throw Error{ErrorCode::StorageFailure, "cannot write " + tmp};
        }
    }
    fs::rename(tmp, file);
}

void OperatorStore::load(fs::path const& file) {
    ops_.clear();
    std::ifstream in{file, std::ios::binary};
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        try {
            ops_.push_back(json::parse(line).get<RepairOperator>());
        } catch (json::exception const& e) {
            throw Error{ErrorCode::StorageFailure, file.string() + ": " + e.what()};
        }
    }
}

void age_hints(std::vector<GapHint>& hints) {
    for (auto& h : hints) {
        --h.ttl;
    }
    std::erase_if(hints, [](GapHint const& h) { return h.ttl <= 0; });
}

}  // namespace mera
