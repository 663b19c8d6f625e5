/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "reprodock/protocol.hpp"
#include "reprodock/taxonomy.hpp"

namespace reprodock {

struct CorpusRecord {
    std::string repo_id;
    Verdict verdict = Verdict::NotBuildable;
    // Categories present in the record's diff report. Only NonReproducible
    // records (or SemanticallyReproducible ones with metadata-only flags) may
    // carry them.
    std::set<RootCauseCategory> categories;
};

struct CorpusSummary {
    int total = 0;
    int buildable = 0;
    int not_buildable = 0;
    int bitwise = 0;
    int infra_fixed = 0;
    int semantic = 0;
    int non_reproducible = 0;
    // Category presence counts (once per record), with their own observed
    // denominator: the classified-report total is independent input, not
    // derived from the verdict counts.
    std::map<RootCauseCategory, int> category_counts;
    int classified_total = 0;

    friend bool operator==(const CorpusSummary&, const CorpusSummary&) = default;
};

CorpusSummary aggregate(const std::vector<CorpusRecord>& records);

// Merging partial summaries equals aggregating the concatenated records.
CorpusSummary merge(const CorpusSummary& a, const CorpusSummary& b);

// count/denom*100 in IEEE double arithmetic, rounded half-up to one decimal
// digit; returned in tenths of a percent. The rounding happens on the exact
// decimal expansion of the double, so 1123/2000 renders 56.1 (the double sits
// just below 56.15) while 877/2000 renders 43.9.
long percent_tenths_half_up(long count, long denom);

// "56.1", or "n/a" when denom == 0.
std::string format_percent(long count, long denom);

std::string render_summary_text(const CorpusSummary& summary);
nlohmann::json summary_to_json(const CorpusSummary& summary);
CorpusSummary summary_from_json(const nlohmann::json& j);
std::string render_summary(const CorpusSummary& summary, bool json_format);

// JSON-lines records: {"repo_id": ..., "verdict": ..., "categories": [...]}.
// Malformed lines are reported with their 1-based line number.
std::vector<CorpusRecord> read_records_jsonl(std::istream& in);
std::string record_to_json_line(const CorpusRecord& record);

}  // namespace reprodock
