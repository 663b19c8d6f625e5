/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/aggregate.hpp"

#include <cstdio>
#include <istream>
#include <sstream>

namespace reprodock {

namespace {

// Outcome table rows, in presentation order.
struct OutcomeRow {
    const char* label;
    const char* key;
    int CorpusSummary::* field;
    bool over_total;  // denominator: total (true) or buildable (false)
};

constexpr OutcomeRow kOutcomeRows[] = {
    {"Buildable (any Dockerfile)", "buildable", &CorpusSummary::buildable, true},
    {"Not buildable", "not_buildable", &CorpusSummary::not_buildable, true},
    {"As-is bitwise reproducible", "bitwise_reproducible", &CorpusSummary::bitwise, false},
    {"Fixed by infra changes", "infra_reproducible", &CorpusSummary::infra_fixed, false},
    {"Semantically reproducible", "semantically_reproducible", &CorpusSummary::semantic, false},
    {"Non-reproducible", "non_reproducible", &CorpusSummary::non_reproducible, false},
};

}  // namespace

CorpusSummary aggregate(const std::vector<CorpusRecord>& records) {
    CorpusSummary s;
    for (const auto& r : records) {
        ++s.total;
        switch (r.verdict) {
            case Verdict::NotBuildable:
                ++s.not_buildable;
                break;
            case Verdict::BitwiseReproducible:
                ++s.buildable;
                ++s.bitwise;
                break;
            case Verdict::InfraReproducible:
                ++s.buildable;
                ++s.infra_fixed;
                break;
            case Verdict::SemanticallyReproducible:
                ++s.buildable;
                ++s.semantic;
                break;
            case Verdict::NonReproducible:
                ++s.buildable;
                ++s.non_reproducible;
                break;
        }
        if (!r.categories.empty()) {
            ++s.classified_total;
            for (auto c : r.categories) {
                ++s.category_counts[c];
            }
        }
    }
    return s;
}

CorpusSummary merge(const CorpusSummary& a, const CorpusSummary& b) {
    CorpusSummary s = a;
    s.total += b.total;
    s.buildable += b.buildable;
    s.not_buildable += b.not_buildable;
    s.bitwise += b.bitwise;
    s.infra_fixed += b.infra_fixed;
    s.semantic += b.semantic;
    s.non_reproducible += b.non_reproducible;
    s.classified_total += b.classified_total;
    for (const auto& [cat, count] : b.category_counts) {
        s.category_counts[cat] += count;
    }
    return s;
}

long percent_tenths_half_up(long count, long denom) {
    double p = static_cast<double>(count) * 100.0 / static_cast<double>(denom);
    // Decide on the exact decimal expansion of the double. A double >= 2^-5
    // has at most ~58 fractional decimal digits, so %.70f prints the exact
    // value (padded with zeros); the tie digit is taken verbatim rather than
    // through another lossy multiply.
    char buf[256];
    std::snprintf(buf, sizeof buf, "%.70f", p);
    std::string_view s{buf};
    auto dot = s.find('.');
    long whole = 0;
    for (char c : s.substr(0, dot)) {
        whole = whole * 10 + (c - '0');
    }
    int d1 = s[dot + 1] - '0';
    char d2 = s[dot + 2];
    long tenths = whole * 10 + d1;
    if (d2 >= '5') ++tenths;
    return tenths;
}

std::string format_percent(long count, long denom) {
    if (denom == 0) return "n/a";
    long tenths = percent_tenths_half_up(count, denom);
    return std::to_string(tenths / 10) + "." + std::to_string(tenths % 10);
}

std::string render_summary_text(const CorpusSummary& s) {
    std::ostringstream out;
    auto row = [&out](std::string_view label, long count, std::string_view percent) {
        out << label;
        if (label.size() < 36) out << std::string(36 - label.size(), ' ');
        std::string c = std::to_string(count);
        if (c.size() < 8) out << std::string(8 - c.size(), ' ');
        out << c;
        if (percent.size() < 8) out << std::string(8 - percent.size(), ' ');
        out << percent << "\n";
    };

    out << "Outcome                                Count       %\n";
    row("Total sampled repos", s.total, format_percent(s.total, s.total));
    for (const auto& r : kOutcomeRows) {
        long denom = r.over_total ? s.total : s.buildable;
        row(r.label, s.*(r.field), format_percent(s.*(r.field), denom));
    }
    out << "\n";
    out << "Root-cause category                    Count       %\n";
    for (auto cat : kAllCategories) {
        auto it = s.category_counts.find(cat);
        int count = it == s.category_counts.end() ? 0 : it->second;
        row(category_name(cat), count, format_percent(count, s.classified_total));
    }
    out << "\n";
    out << "classified reports: " << s.classified_total << "\n";
    return out.str();
}

nlohmann::json summary_to_json(const CorpusSummary& s) {
    nlohmann::json j;
    j["total"] = s.total;
    nlohmann::json outcomes;
    for (const auto& r : kOutcomeRows) {
        long denom = r.over_total ? s.total : s.buildable;
        outcomes[r.key] = {{"count", s.*(r.field)},
                           {"percent", format_percent(s.*(r.field), denom)}};
    }
    j["outcomes"] = std::move(outcomes);
    nlohmann::json categories;
    for (auto cat : kAllCategories) {
        auto it = s.category_counts.find(cat);
        int count = it == s.category_counts.end() ? 0 : it->second;
        categories[std::string(category_id(cat))] = {
            {"count", count}, {"percent", format_percent(count, s.classified_total)}};
    }
    j["root_causes"] = {{"classified_total", s.classified_total},
                        {"categories", std::move(categories)}};
    return j;
}

CorpusSummary summary_from_json(const nlohmann::json& j) {
    CorpusSummary s;
    s.total = j.at("total").get<int>();
    const auto& outcomes = j.at("outcomes");
    for (const auto& r : kOutcomeRows) {
        s.*(r.field) = outcomes.at(r.key).at("count").get<int>();
    }
    const auto& rc = j.at("root_causes");
    s.classified_total = rc.at("classified_total").get<int>();
    for (const auto& [key, value] : rc.at("categories").items()) {
        auto cat = category_from_id(key);
        if (!cat) {
            throw Error("unknown category id in summary: " + key);
        }
        int count = value.at("count").get<int>();
        if (count != 0) s.category_counts[*cat] = count;
    }
    return s;
}

std::string render_summary(const CorpusSummary& summary, bool json_format) {
    if (json_format) {
        return summary_to_json(summary).dump(2) + "\n";
    }
    return render_summary_text(summary);
}

std::vector<CorpusRecord> read_records_jsonl(std::istream& in) {
    std::vector<CorpusRecord> records;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        auto first = line.find_first_not_of(" \t");
        if (first == std::string::npos) continue;

        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error("records line " + std::to_string(line_no) + ": invalid JSON record");
        }
        CorpusRecord r;
        if (!j.contains("repo_id") || !j.at("repo_id").is_string()) {
            throw Error("records line " + std::to_string(line_no) + ": missing repo_id");
        }
        r.repo_id = j.at("repo_id").get<std::string>();
        if (!j.contains("verdict") || !j.at("verdict").is_string()) {
            throw Error("records line " + std::to_string(line_no) + ": missing verdict");
        }
        auto v = verdict_from_name(j.at("verdict").get<std::string>());
        if (!v) {
            throw Error("records line " + std::to_string(line_no) + ": unknown verdict '" +
                        j.at("verdict").get<std::string>() + "'");
        }
        r.verdict = *v;
        if (j.contains("categories")) {
            if (!j.at("categories").is_array()) {
                throw Error("records line " + std::to_string(line_no) +
                            ": categories must be an array");
            }
            for (const auto& el : j.at("categories")) {
                auto cat = category_from_id(el.get<std::string>());
                if (!cat) {
                    throw Error("records line " + std::to_string(line_no) +
                                ": unknown category '" + el.get<std::string>() + "'");
                }
                r.categories.insert(*cat);
            }
        }
        if (!r.categories.empty() && r.verdict != Verdict::NonReproducible &&
            r.verdict != Verdict::SemanticallyReproducible) {
            throw Error("records line " + std::to_string(line_no) +
                        ": categories are only valid on NonReproducible or "
                        "SemanticallyReproducible records");
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::string record_to_json_line(const CorpusRecord& record) {
    nlohmann::json j;
    j["repo_id"] = record.repo_id;
    j["verdict"] = std::string(verdict_name(record.verdict));
    nlohmann::json cats = nlohmann::json::array();
    for (auto c : record.categories) {
        cats.push_back(std::string(category_id(c)));
    }
    j["categories"] = std::move(cats);
    return j.dump();
}

}  // namespace reprodock
