/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "reprodock/aggregate.hpp"

using namespace reprodock;

namespace {

std::vector<CorpusRecord> study_shaped_records() {
    std::vector<CorpusRecord> records;
    int id = 0;
    auto add = [&records, &id](int count, Verdict v) {
        for (int i = 0; i < count; ++i) {
            records.push_back({"repo-" + std::to_string(id++), v, {}});
        }
    };
    add(877, Verdict::NotBuildable);
    add(30, Verdict::BitwiseReproducible);
    add(209, Verdict::InfraReproducible);
    add(884, Verdict::NonReproducible);
    return records;
}

// 954 classified records carrying category flags with the published
// prevalence counts.
std::vector<CorpusRecord> classified_records() {
    struct Target {
        RootCauseCategory category;
        int count;
    };
    const Target targets[] = {
        {RootCauseCategory::TimestampsMetadata, 954},
        {RootCauseCategory::FormattingFileOrdering, 745},
        {RootCauseCategory::SystemLogs, 413},
        {RootCauseCategory::CachesDatabases, 351},
        {RootCauseCategory::CompiledArtifacts, 191},
        {RootCauseCategory::ApplicationSpecific, 124},
        {RootCauseCategory::RandomNondeterministic, 90},
        {RootCauseCategory::PackageManagerState, 53},
    };
    std::vector<CorpusRecord> records;
    for (int i = 0; i < 954; ++i) {
        CorpusRecord r;
        r.repo_id = "classified-" + std::to_string(i);
        r.verdict = Verdict::NonReproducible;
        for (const auto& t : targets) {
            if (i < t.count) r.categories.insert(t.category);
        }
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace

TEST_CASE("aggregate: outcome counts and derived buildable total") {
    auto summary = aggregate(study_shaped_records());
    CHECK(summary.total == 2000);
    CHECK(summary.not_buildable == 877);
    CHECK(summary.buildable == 1123);
    CHECK(summary.bitwise == 30);
    CHECK(summary.infra_fixed == 209);
    CHECK(summary.semantic == 0);
    CHECK(summary.non_reproducible == 884);

    CHECK(format_percent(summary.buildable, summary.total) == "56.1");
    CHECK(format_percent(summary.not_buildable, summary.total) == "43.9");
    CHECK(format_percent(summary.bitwise, summary.buildable) == "2.7");
    CHECK(format_percent(summary.infra_fixed, summary.buildable) == "18.6");
    CHECK(format_percent(summary.non_reproducible, summary.buildable) == "78.7");
}

TEST_CASE("aggregate: category table reproduces the published prevalence") {
    auto summary = aggregate(classified_records());
    CHECK(summary.classified_total == 954);
    struct Want {
        RootCauseCategory category;
        int count;
        const char* percent;
    };
    const Want wants[] = {
        {RootCauseCategory::TimestampsMetadata, 954, "100.0"},
        {RootCauseCategory::FormattingFileOrdering, 745, "78.1"},
        {RootCauseCategory::SystemLogs, 413, "43.3"},
        {RootCauseCategory::CachesDatabases, 351, "36.8"},
        {RootCauseCategory::CompiledArtifacts, 191, "20.0"},
        {RootCauseCategory::ApplicationSpecific, 124, "13.0"},
        {RootCauseCategory::RandomNondeterministic, 90, "9.4"},
        {RootCauseCategory::PackageManagerState, 53, "5.6"},
    };
    for (const auto& w : wants) {
        CAPTURE(category_name(w.category));
        CHECK(summary.category_counts.at(w.category) == w.count);
        CHECK(format_percent(w.count, summary.classified_total) == w.percent);
    }
}

TEST_CASE("aggregate: empty input renders n/a instead of dividing by zero") {
    auto summary = aggregate({});
    CHECK(summary.total == 0);
    auto text = render_summary_text(summary);
    CHECK(text.find("n/a") != std::string::npos);
}

TEST_CASE("aggregate: verdict counts partition buildable") {
    std::mt19937 rng{17};
    for (int round = 0; round < 50; ++round) {
        std::vector<CorpusRecord> records;
        std::uniform_int_distribution<int> count_d(0, 200);
        int n = count_d(rng);
        for (int i = 0; i < n; ++i) {
            auto v = static_cast<Verdict>(rng() % 5);
            CorpusRecord r{"r" + std::to_string(i), v, {}};
            if (v == Verdict::NonReproducible && rng() % 2 == 0) {
                r.categories.insert(RootCauseCategory::SystemLogs);
            }
            records.push_back(std::move(r));
        }
        auto s = aggregate(records);
        CHECK(s.buildable + s.not_buildable == s.total);
        CHECK(s.bitwise + s.infra_fixed + s.semantic + s.non_reproducible == s.buildable);
    }
}

TEST_CASE("aggregate: order invariance and shard-merge equivalence") {
    auto records = study_shaped_records();
    auto base = aggregate(records);

    std::mt19937 rng{99};
    std::shuffle(records.begin(), records.end(), rng);
    CHECK(aggregate(records) == base);

    std::vector<CorpusRecord> left(records.begin(), records.begin() + 700);
    std::vector<CorpusRecord> right(records.begin() + 700, records.end());
    CHECK(merge(aggregate(left), aggregate(right)) == base);
}

TEST_CASE("percent: half-up on the double value, long-double oracle") {
    std::mt19937_64 rng{2024};
    for (int i = 0; i < 5000; ++i) {
        long denom = static_cast<long>(rng() % 5000) + 1;
        long count = static_cast<long>(rng() % (denom + 1));
        long got = percent_tenths_half_up(count, denom);
        // Independent route: widen to long double, where p*10 is exact for
        // these magnitudes, then round half-up.
        long double p = static_cast<long double>(
            static_cast<double>(count) * 100.0 / static_cast<double>(denom));
        long want = static_cast<long>(std::floor(p * 10.0L + 0.5L));
        CAPTURE(count);
        CAPTURE(denom);
        CHECK(got == want);
    }
}

TEST_CASE("percent: exact-tie doubles round up") {
    // 1/400*100 = 0.25 exactly representable: half-up gives 0.3.
    CHECK(format_percent(1, 400) == "0.3");
    CHECK(format_percent(3, 400) == "0.8");  // 0.75 -> 0.8
    CHECK(format_percent(1, 8) == "12.5");
    // The published boundary cases.
    CHECK(format_percent(1123, 2000) == "56.1");
    CHECK(format_percent(877, 2000) == "43.9");
}

TEST_CASE("render: text summary carries the headline counts") {
    auto text = render_summary_text(aggregate(study_shaped_records()));
    CHECK(text.find("1123") != std::string::npos);
    CHECK(text.find("56.1") != std::string::npos);
    CHECK(text.find("43.9") != std::string::npos);
    CHECK(text.find("78.7") != std::string::npos);
    CHECK(text.find("Total sampled repos") != std::string::npos);
    CHECK(text.find("Timestamps & metadata") != std::string::npos);
}

TEST_CASE("render: json round trip is byte-stable") {
    auto records = study_shaped_records();
    auto classified = classified_records();
    records.insert(records.end(), classified.begin(), classified.end());
    auto summary = aggregate(records);
    std::string first = render_summary(summary, true);
    auto parsed = summary_from_json(nlohmann::json::parse(first));
    std::string second = render_summary(parsed, true);
    CHECK(first == second);
}

TEST_CASE("records: jsonl reading, validation, and line numbers") {
    std::string good =
        R"({"repo_id":"a/b","verdict":"NonReproducible","categories":["system-logs"]})"
        "\n"
        R"({"repo_id":"c/d","verdict":"BitwiseReproducible","categories":[]})"
        "\n";
    std::istringstream in(good);
    auto records = read_records_jsonl(in);
    REQUIRE(records.size() == 2);
    CHECK(records[0].categories.count(RootCauseCategory::SystemLogs) == 1);
    CHECK(records[1].verdict == Verdict::BitwiseReproducible);

    std::istringstream bad("{}\n");
    CHECK_THROWS_WITH_AS(read_records_jsonl(bad), doctest::Contains("line 1"), Error);

    std::string bad7;
    for (int i = 0; i < 6; ++i) {
        bad7 += R"({"repo_id":"x","verdict":"NotBuildable"})";
        bad7 += "\n";
    }
    bad7 += "not json\n";
    std::istringstream in7(bad7);
    CHECK_THROWS_WITH_AS(read_records_jsonl(in7), doctest::Contains("line 7"), Error);

    // Categories on a bitwise record violate the record invariant.
    std::istringstream invalid(
        R"({"repo_id":"x","verdict":"BitwiseReproducible","categories":["system-logs"]})"
        "\n");
    CHECK_THROWS_AS(read_records_jsonl(invalid), Error);
}

TEST_CASE("records: serialization round-trips through the reader") {
    CorpusRecord r{"owner/repo", Verdict::NonReproducible,
                   {RootCauseCategory::SystemLogs, RootCauseCategory::CachesDatabases}};
    std::istringstream in(record_to_json_line(r) + "\n");
    auto back = read_records_jsonl(in);
    REQUIRE(back.size() == 1);
    CHECK(back[0].repo_id == r.repo_id);
    CHECK(back[0].verdict == r.verdict);
    CHECK(back[0].categories == r.categories);
}
