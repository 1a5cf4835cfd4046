#include "mera/fingerprint.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <utility>

#include "mera/error.hpp"
#include "mera/task.hpp"
#include "mera/validator.hpp"

namespace mera {

using nlohmann::json;

namespace {

auto ratio(double x, double y) -> double {
    double const hi = std::max(x, y);
    if (hi <= 0.0) {
        return 1.0;
    }
    return std::min(x, y) / hi;
}

template <typename T>
auto jaccard(std::set<T> const& a, std::set<T> const& b) -> double {
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::size_t inter = 0;
    for (auto const& x : a) {
        inter += b.count(x);
    }
    return static_cast<double>(inter) / static_cast<double>(a.size() + b.size() - inter);
}

/// Multiset Jaccard: sum of min counts over sum of max counts.
auto multiset_jaccard(std::vector<int> const& a, std::vector<int> const& b) -> double {
    if (a.empty() && b.empty()) {
        return 1.0;
    }
    std::map<int, std::pair<int, int>> counts;
    for (int x : a) {
        ++counts[x].first;
    }
    for (int x : b) {
        ++counts[x].second;
    }
    int lo = 0;
    int hi = 0;
    for (auto const& [_, c] : counts) {
        lo += std::min(c.first, c.second);
        hi += std::max(c.first, c.second);
    }
    return static_cast<double>(lo) / static_cast<double>(hi);
}

auto bucket_from_string(std::string const& s) -> ComplexityBucket {
    if (s == "LOW") return ComplexityBucket::Low;
    if (s == "MED") return ComplexityBucket::Med;
    if (s == "HIGH") return ComplexityBucket::High;
    throw Error{ErrorCode::ParseFailure, "bad complexity bucket: " + s};
}

}  // namespace

auto to_string(ComplexityBucket b) -> std::string_view {
    switch (b) {
        case ComplexityBucket::Low: return "LOW";
        case ComplexityBucket::Med: return "MED";
        case ComplexityBucket::High: return "HIGH";
    }
    return "LOW";
}

void to_json(json& j, Fingerprint const& f) {
    j = json{{"task_family", f.task_family},
             {"trigrams", f.trigrams},
             {"ast", f.ast},
             {"failure_signature",
              {{"failure", to_string(f.failure_signature.failure)},
               {"key", f.failure_signature.key}}},
             {"complexity", to_string(f.complexity)}};
}

void from_json(json const& j, Fingerprint& f) {
    f.task_family = j.at("task_family").get<std::string>();
    f.trigrams = j.at("trigrams").get<std::vector<Trigram>>();
    f.ast = j.at("ast").get<AstFeatures>();
    auto const& sig = j.at("failure_signature");
    auto failure = failure_class_from_string(sig.at("failure").get<std::string>());
    if (!failure) {
        throw Error{ErrorCode::ParseFailure, "bad failure class in fingerprint"};
    }
    f.failure_signature = {*failure, sig.value("key", std::string{})};
    f.complexity = bucket_from_string(j.at("complexity").get<std::string>());
}

void SimilarityWeights::validate() const {
    for (double w : {tok, ast, fail, fam}) {
        if (!(w >= 0.0)) {
            throw Error{ErrorCode::InvalidConfig, "similarity weights must be >= 0"};
        }
    }
    if (!(tok + ast + fail + fam > 0.0)) {
        throw Error{ErrorCode::InvalidConfig, "similarity weights must not all be 0"};
    }
}

auto token_trigrams(std::string const& text, std::size_t cap) -> std::vector<Trigram> {
    std::vector<std::string> tokens;
    std::string cur;
    for (char ch : text) {
        auto const c = static_cast<unsigned char>(ch);
        if (std::isalnum(c) || c == '_') {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            tokens.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) {
        tokens.push_back(std::move(cur));
    }
    std::vector<Trigram> out;
    std::set<Trigram> seen;
    for (std::size_t i = 0; i + 2 < tokens.size() && out.size() < cap; ++i) {
        Trigram t{tokens[i], tokens[i + 1], tokens[i + 2]};
        if (seen.insert(t).second) {
            out.push_back(std::move(t));
        }
    }
    return out;
}

auto task_family_label(std::string const& text) -> std::string {
    std::string lower;
    lower.reserve(text.size());
    for (char ch : text) {
        auto const c = static_cast<unsigned char>(ch);
        lower.push_back(std::isalnum(c) ? static_cast<char>(std::tolower(c)) : ' ');
    }
    // Collapse runs of separators so "Q-Learning" and "q  learning" agree.
    std::string norm;
    for (char c : lower) {
        if (c != ' ' || (!norm.empty() && norm.back() != ' ')) {
            norm.push_back(c);
        }
    }
    norm = " " + norm + " ";
    static std::vector<std::pair<std::vector<std::string>, std::string>> const table = {
        {{" value iteration "}, "value-iteration"},
        {{" policy iteration "}, "policy-iteration"},
        {{" sarsa "}, "sarsa"},
        {{" q learning ", " qlearning "}, "q-learning"},
        {{" monte carlo "}, "monte-carlo"},
        {{" bandit ", " bandits "}, "bandit"},
    };
    for (auto const& [keys, family] : table) {
        for (auto const& k : keys) {
            if (norm.find(k) != std::string::npos) {
                return family;
            }
        }
    }
    return "generic";
}

auto complexity_bucket(int approx_cyclomatic) -> ComplexityBucket {
    if (approx_cyclomatic <= 5) {
        return ComplexityBucket::Low;
    }
    if (approx_cyclomatic <= 15) {
        return ComplexityBucket::Med;
    }
    return ComplexityBucket::High;
}

auto failure_signature(ValidationReport const* report) -> FailureSignature {
    if (report == nullptr) {
        return {};
    }
    return {report->primary_failure, report->diagnostic_key};
}

auto compute_fingerprint(TaskSpec const& task, std::string const* source,
                         ValidationReport const* report, Analyzer& analyzer,
                         std::size_t trigram_cap) -> Fingerprint {
    Fingerprint f;
    f.task_family = task.family.empty() ? task_family_label(task.request) : task.family;
    f.trigrams = token_trigrams(task.request, trigram_cap);
    if (source != nullptr && !source->empty()) {
        try {
            f.ast = analyzer.features(*source);
        } catch (Error const& e) {
            // Unparsable candidates fingerprint as structure-free.
            if (e.code() != ErrorCode::ParseFailure) {
                throw;
            }
        }
    }
    f.failure_signature = failure_signature(report);
    f.complexity = complexity_bucket(f.ast.approx_cyclomatic);
    return f;
}

auto ast_similarity(AstFeatures const& a, AstFeatures const& b) -> double {
    auto flag = [](bool v) { return v ? 1.0 : 0.0; };
    std::vector<std::pair<double, double>> dims = {
        {a.function_count, b.function_count},
        {a.class_count, b.class_count},
        {a.max_loop_depth, b.max_loop_depth},
        {a.approx_cyclomatic, b.approx_cyclomatic},
        {flag(a.recursion), flag(b.recursion)},
        {flag(a.class_usage), flag(b.class_usage)},
        {flag(a.state_machine), flag(b.state_machine)},
    };
    for (std::size_t i = 0; i < kCommonLibraries.size(); ++i) {
        dims.emplace_back(flag(a.common_libraries[i]), flag(b.common_libraries[i]));
    }
    double sum = 0.0;
    for (auto const& [x, y] : dims) {
        sum += ratio(x, y);
    }
    double const s_struct = sum / static_cast<double>(dims.size());
    double const s_imports = jaccard(a.import_names, b.import_names);
    double const s_return = multiset_jaccard(a.return_arities, b.return_arities);
    return 0.70 * s_struct + 0.15 * s_imports + 0.15 * s_return;
}

auto similarity_parts(Fingerprint const& a, Fingerprint const& b) -> SimilarityParts {
    SimilarityParts p;
    p.tok = jaccard(std::set<Trigram>(a.trigrams.begin(), a.trigrams.end()),
                    std::set<Trigram>(b.trigrams.begin(), b.trigrams.end()));
    p.ast = ast_similarity(a.ast, b.ast);
    if (a.failure_signature.failure == b.failure_signature.failure) {
        p.fail = a.failure_signature.key == b.failure_signature.key ? 1.0 : 0.5;
    }
    p.fam = a.task_family == b.task_family ? 1.0 : 0.0;
    return p;
}

auto combine(SimilarityParts const& p, SimilarityWeights const& w) -> double {
    double const total = w.tok + w.ast + w.fail + w.fam;
    double const s = (w.tok * p.tok + w.ast * p.ast + w.fail * p.fail + w.fam * p.fam) / total;
    return std::clamp(s, 0.0, 1.0);
}

auto similarity(Fingerprint const& a, Fingerprint const& b, SimilarityWeights const& w)
    -> double {
    return combine(similarity_parts(a, b), w);
}

}  // namespace mera
