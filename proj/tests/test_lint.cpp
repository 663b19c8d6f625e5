/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <doctest.h>

#include <algorithm>
#include <array>
#include <random>
#include <set>
#include <thread>

#include <nlohmann/json.hpp>

#include "reprodock/lint.hpp"

#include "fixtures.hpp"

using namespace reprodock;
using namespace reprodock::testsupport;

namespace {

std::set<std::string> rule_ids(const std::vector<Finding>& findings) {
    std::set<std::string> ids;
    for (const auto& f : findings) ids.insert(f.rule_id);
    return ids;
}

std::set<std::string> lint_ids(const char* text) {
    auto doc = parse_dockerfile(text);
    return rule_ids(lint(doc, builtin_catalog()).findings);
}

const Finding* find_finding(const std::vector<Finding>& findings, std::string_view id) {
    for (const auto& f : findings) {
        if (f.rule_id == id) return &f;
    }
    return nullptr;
}

}  // namespace

TEST_CASE("catalog: ids unique, DR001..DR013 present") {
    auto catalog = builtin_catalog();
    REQUIRE(catalog.size() == 13);
    std::set<std::string> ids;
    for (const auto& r : catalog) ids.insert(r.id);
    CHECK(ids.size() == 13);
    for (int i = 1; i <= 13; ++i) {
        char buf[8];
        std::snprintf(buf, sizeof buf, "DR%03d", i);
        CHECK(ids.count(buf) == 1);
    }
}

TEST_CASE("catalog: pinned categories and severities") {
    auto catalog = builtin_catalog();
    CHECK(find_rule(catalog, "DR004")->category == RootCauseCategory::CachesDatabases);
    CHECK(find_rule(catalog, "DR010")->category == RootCauseCategory::SystemLogs);
    for (const char* id : {"DR001", "DR004", "DR005", "DR006"}) {
        CHECK(find_rule(catalog, id)->severity == Severity::Error);
    }
    for (const char* id : {"DR003", "DR007", "DR008", "DR009", "DR010", "DR011", "DR012"}) {
        CHECK(find_rule(catalog, id)->severity == Severity::Warning);
    }
    for (const char* id : {"DR002", "DR013"}) {
        CHECK(find_rule(catalog, id)->severity == Severity::Info);
    }
}

TEST_CASE("catalog: DR007 fix inserts the epoch wiring after FROM") {
    auto catalog = builtin_catalog();
    CHECK(find_rule(catalog, "DR007")->fixable);
    auto doc = parse_dockerfile(kPythonSlimBasic);
    auto result = lint(doc, catalog);
    const Finding* f = find_finding(result.findings, "DR007");
    REQUIRE(f != nullptr);
    REQUIRE(f->fix.has_value());
    CHECK(f->fix->kind == FixKind::InsertInstructionsAfter);
    REQUIRE(f->fix->lines.size() == 2);
    CHECK(f->fix->lines[0] == "ARG SOURCE_DATE_EPOCH");
    CHECK(f->fix->lines[1] == "ENV SOURCE_DATE_EPOCH=$SOURCE_DATE_EPOCH");
}

TEST_CASE("lint: python service triggers the documented rules") {
    auto ids = lint_ids(kPythonSlimBasic);
    for (const char* id : {"DR001", "DR002", "DR005", "DR007"}) {
        CAPTURE(id);
        CHECK(ids.count(id) == 1);
    }
    auto doc = parse_dockerfile(kPythonSlimBasic);
    const Finding* dr002 = find_finding(lint(doc, builtin_catalog()).findings, "DR002");
    REQUIRE(dr002 != nullptr);
    CHECK(dr002->message.find("flask") != std::string::npos);
    CHECK(dr002->message.find("requests") != std::string::npos);
}

TEST_CASE("lint: hardened template triggers none of DR003-DR010") {
    auto ids = lint_ids(kHardenedTemplate);
    for (const char* id :
         {"DR003", "DR004", "DR005", "DR006", "DR007", "DR008", "DR009", "DR010"}) {
        CAPTURE(id);
        CHECK(ids.count(id) == 0);
    }
    // The pycache cleanup also silences the bytecode rule.
    CHECK(ids.count("DR011") == 0);
}

TEST_CASE("lint: node global install fires npm-cache rule but not apt-cache rule") {
    auto ids = lint_ids(kNodeGlobalInstall);
    CHECK(ids.count("DR006") == 1);
    CHECK(ids.count("DR004") == 0);
}

TEST_CASE("lint: cuda pip stack fires the apt and pip hygiene set") {
    auto ids = lint_ids(kCudaPipStack);
    for (const char* id : {"DR003", "DR004", "DR005", "DR009"}) {
        CAPTURE(id);
        CHECK(ids.count(id) == 1);
    }
    CHECK(ids.count("DR013") == 1);  // apt-get upgrade -y
}

TEST_CASE("lint: apt chain scope is one RUN; later cleanup does not count") {
    auto ids = lint_ids(
        "FROM debian\n"
        "RUN apt-get update && apt-get install -y curl\n"
        "RUN rm -rf /var/lib/apt/lists/*\n");
    CHECK(ids.count("DR004") == 1);
}

TEST_CASE("lint: one finding per rule per RUN chain") {
    auto doc = parse_dockerfile(
        "FROM debian\n"
        "RUN pip install a && pip install b && pip3 install c\n");
    auto result = lint(doc, builtin_catalog());
    int dr005 = 0;
    for (const auto& f : result.findings) {
        if (f.rule_id == "DR005") ++dr005;
    }
    CHECK(dr005 == 1);
}

TEST_CASE("lint: findings sorted by (line, rule id)") {
    auto doc = parse_dockerfile(kCudaPipStack);
    auto result = lint(doc, builtin_catalog());
    for (std::size_t i = 1; i < result.findings.size(); ++i) {
        const auto& prev = result.findings[i - 1];
        const auto& cur = result.findings[i];
        bool ordered = prev.span.start < cur.span.start ||
                       (prev.span.start == cur.span.start && prev.rule_id <= cur.rule_id);
        CHECK(ordered);
    }
}

TEST_CASE("lint: unterminated quote skips the chain with a note") {
    auto doc = parse_dockerfile("FROM debian\nRUN echo 'oops\n");
    auto result = lint(doc, builtin_catalog());
    CHECK(result.notes.size() == 1);
    CHECK(rule_ids(result.findings).count("DR004") == 0);
}

TEST_CASE("lint: category equals owning rule category") {
    auto catalog = builtin_catalog();
    auto doc = parse_dockerfile(kCudaPipStack);
    for (const auto& f : lint(doc, catalog).findings) {
        CHECK(f.category == find_rule(catalog, f.rule_id)->category);
    }
}

TEST_CASE("lint: exec-form RUN is one opaque segment and does not crash rules") {
    auto ids = lint_ids("FROM debian\nRUN [\"apt-get\", \"install\", \"-y\", \"curl\"]\n");
    // Exec form still exposes argv, so the apt rules can evaluate it.
    CHECK(ids.count("DR004") == 1);
}

TEST_CASE("pin map: parse, lookup, and errors") {
    auto map = PinMap::parse(
        "# comment\n"
        "python:3.11-slim sha256:" +
        std::string(64, 'a') +
        "\n"
        "\n"
        "localhost:5000/app:v1 sha256:" +
        std::string(64, 'b') + "\n");
    REQUIRE(map.lookup("python", "3.11-slim").has_value());
    CHECK(map.lookup("python", "3.11-slim")->hex() == std::string(64, 'a'));
    CHECK(map.lookup("localhost:5000/app", "v1").has_value());
    CHECK_FALSE(map.lookup("python", "3.12").has_value());

    CHECK_THROWS_WITH_AS(PinMap::parse("python sha256:" + std::string(64, 'a') + "\n"),
                         doctest::Contains("line 1"), Error);
    CHECK_THROWS_WITH_AS(PinMap::parse("python:3.11 sha256:zz\n"), doctest::Contains("line 1"),
                         Error);
}

TEST_CASE("fix: pip cache flag lands right after the install subcommand") {
    auto doc = parse_dockerfile(
        "FROM nvidia/cuda:12.5.1-devel-ubuntu22.04\n"
        "RUN python3 -m pip install --upgrade pip pytest cmake\n");
    auto result = lint(doc, builtin_catalog());
    std::vector<Finding> only_dr005;
    for (const auto& f : result.findings) {
        if (f.rule_id == "DR005") only_dr005.push_back(f);
    }
    REQUIRE(only_dr005.size() == 1);
    auto outcome = apply_fixes(doc, only_dr005);
    CHECK(outcome.applied == 1);
    CHECK(outcome.doc.render() ==
          "FROM nvidia/cuda:12.5.1-devel-ubuntu22.04\n"
          "RUN python3 -m pip install --no-cache-dir --upgrade pip pytest cmake\n");
}

TEST_CASE("fix: base image pin via pin map") {
    PinMap pins;
    pins.insert("python", "3.11-slim", Digest::from_hex(std::string(64, 'c')));
    LintOptions options;
    options.pin_map = &pins;

    auto doc = parse_dockerfile(kPythonSlimBasic);
    auto result = lint(doc, builtin_catalog(), options);
    const Finding* dr001 = find_finding(result.findings, "DR001");
    REQUIRE(dr001 != nullptr);
    REQUIRE(dr001->fix.has_value());

    auto outcome = apply_fixes(doc, result.findings);
    auto fixed = outcome.doc;
    auto ref = fixed.instructions()[0].from->image;
    CHECK(ref.digest == "sha256:" + std::string(64, 'c'));
    CHECK(ref.tag == "3.11-slim");
    // Re-lint: the fixed pairs are gone.
    auto after = rule_ids(lint(fixed, builtin_catalog(), options).findings);
    CHECK(after.count("DR001") == 0);
    CHECK(after.count("DR005") == 0);
    CHECK(after.count("DR007") == 0);
}

TEST_CASE("fix: without a pin map the base-image finding stays unfixed") {
    auto doc = parse_dockerfile(kPythonSlimBasic);
    auto result = lint(doc, builtin_catalog());
    auto outcome = apply_fixes(doc, result.findings);
    bool dr001_unfixed = false;
    for (const auto& f : outcome.unfixed) {
        if (f.rule_id == "DR001") dr001_unfixed = true;
    }
    CHECK(dr001_unfixed);
    auto after = rule_ids(lint(outcome.doc, builtin_catalog()).findings);
    CHECK(after.count("DR001") == 1);  // still there
    CHECK(after.count("DR005") == 0);  // fixed
}

TEST_CASE("fix: zero findings is a byte-exact no-op") {
    auto doc = parse_dockerfile(kHardenedTemplate);
    auto outcome = apply_fixes(doc, {});
    CHECK(outcome.applied == 0);
    CHECK(outcome.doc.render() == kHardenedTemplate);
}

TEST_CASE("fix: applying the same findings twice is byte-idempotent") {
    auto doc = parse_dockerfile(kCudaPipStack);
    auto findings = lint(doc, builtin_catalog()).findings;
    auto once = apply_fixes(doc, findings);
    auto twice = apply_fixes(once.doc, findings);
    CHECK(twice.applied == 0);
    CHECK(twice.doc.render() == once.doc.render());
}

TEST_CASE("fix: untouched instructions stay byte-identical") {
    auto doc = parse_dockerfile(kCudaPipStack);
    auto findings = lint(doc, builtin_catalog()).findings;
    std::vector<Finding> subset;
    for (const auto& f : findings) {
        if (f.rule_id == "DR005") subset.push_back(f);
    }
    auto outcome = apply_fixes(doc, subset);
    // The first RUN (apt chain) is untouched by a pip-only fix.
    CHECK(outcome.doc.instructions()[1].raw_text == doc.instructions()[1].raw_text);
    CHECK(outcome.doc.instructions()[0].raw_text == doc.instructions()[0].raw_text);
}

TEST_CASE("fix: multi-line chain append lands on the last payload line") {
    auto doc = parse_dockerfile(
        "FROM debian\n"
        "RUN apt-get update && \\\n"
        "    apt-get install -y --no-install-recommends curl && \\\n"
        "    rm -rf /var/lib/apt/lists/* /usr/share/man /usr/share/doc /var/log/*\n");
    auto findings = lint(doc, builtin_catalog()).findings;
    std::vector<Finding> dr008;
    for (const auto& f : findings) {
        if (f.rule_id == "DR008") dr008.push_back(f);
    }
    REQUIRE(dr008.size() == 1);
    auto outcome = apply_fixes(doc, dr008);
    CHECK(outcome.applied == 1);
    auto after = lint(outcome.doc, builtin_catalog()).findings;
    CHECK(find_finding(after, "DR008") == nullptr);
    // Lines 1-3 are untouched; only the final line changed.
    CHECK(outcome.doc.line(1) == doc.line(1));
    CHECK(outcome.doc.line(2) == doc.line(2));
    CHECK(outcome.doc.line(3).find("truncate -s 0 /etc/machine-id") != std::string::npos);
}

TEST_CASE("fix sufficiency: every fixable rule across generated chain variants") {
    std::mt19937 rng{424242};
    auto pick = [&rng](const std::vector<std::string>& pool) {
        std::uniform_int_distribution<std::size_t> d(0, pool.size() - 1);
        return pool[d(rng)];
    };

    // Offending chains per rule; the generator wraps them with noise segments
    // and random continuation layouts.
    struct Case {
        const char* rule;
        std::vector<std::string> variants;
    };
    const std::vector<Case> cases = {
        {"DR003",
         {"apt-get install -y curl", "apt-get update && apt-get install -y git vim",
          "apt install -y build-essential"}},
        {"DR004",
         {"apt-get install -y curl", "apt-get update && apt-get install -y --no-install-recommends "
                                     "ca-certificates"}},
        {"DR005",
         {"pip install flask", "pip3 install -r reqs.txt && pip install gunicorn",
          "python3 -m pip install --upgrade pip"}},
        {"DR006",
         {"npm install -g husky vite", "npm ci", "npm install express && echo done"}},
        {"DR008", {"apt-get install -y dbus", "apk add openssh"}},
        {"DR009", {"apt-get install -y man-db"}},
        {"DR010", {"apt-get install -y rsyslog", "dnf install httpd"}},
        {"DR012", {"go build -o /out ./cmd", "go vet ./... && go build ./..."}},
    };
    const std::vector<std::string> noise = {
        "echo building", "mkdir -p /srv", "true", "sed -i 's/a/b/' /etc/conf",
    };

    auto catalog = builtin_catalog();
    int generated = 0;
    for (const auto& c : cases) {
        for (int i = 0; i < 16; ++i) {
            std::string chain = pick(c.variants);
            std::uniform_int_distribution<int> flip(0, 1);
            if (flip(rng) != 0) chain = pick(noise) + " && " + chain;
            if (flip(rng) != 0) chain += " && " + pick(noise);
            std::string run = "RUN " + chain;
            if (flip(rng) != 0) {
                // Re-layout across continuation lines at segment boundaries.
                std::string laid;
                for (std::size_t p = 0; p < run.size(); ++p) {
                    if (run.compare(p, 4, " && ") == 0) {
                        laid += " && \\\n    ";
                        p += 3;
                    } else {
                        laid += run[p];
                    }
                }
                run = laid;
            }
            std::string text = "FROM debian:12\n" + run + "\n";
            CAPTURE(text);
            auto doc = parse_dockerfile(text);
            auto findings = lint(doc, catalog).findings;
            std::vector<Finding> targeted;
            for (const auto& f : findings) {
                if (f.rule_id == c.rule) targeted.push_back(f);
            }
            REQUIRE(!targeted.empty());
            auto outcome = apply_fixes(doc, targeted);
            auto after = lint(outcome.doc, catalog).findings;
            CHECK(find_finding(after, c.rule) == nullptr);
            // Byte idempotence.
            auto again = apply_fixes(outcome.doc, targeted);
            CHECK(again.doc.render() == outcome.doc.render());
            ++generated;
        }
    }
    CHECK(generated >= 100);
}

TEST_CASE("monotonicity: appending chain instructions never moves earlier findings") {
    std::mt19937 rng{777};
    const std::vector<std::string> tail_pool = {
        "RUN echo done",
        "COPY extra.txt /srv/",
        "WORKDIR /srv",
        "EXPOSE 9090",
        "LABEL stage=extra",
        "RUN apt-get install -y netcat",
    };
    auto doc_text = std::string(kCudaPipStack);
    auto before = lint(parse_dockerfile(doc_text), builtin_catalog()).findings;
    std::string extended = doc_text;
    for (int i = 0; i < 6; ++i) {
        std::uniform_int_distribution<std::size_t> d(0, tail_pool.size() - 1);
        extended += tail_pool[d(rng)] + "\n";
        auto after = lint(parse_dockerfile(extended), builtin_catalog()).findings;
        for (const auto& f : before) {
            bool found = false;
            for (const auto& g : after) {
                if (g.rule_id == f.rule_id && g.span == f.span) {
                    found = true;
                    break;
                }
            }
            CAPTURE(f.rule_id);
            CHECK(found);
        }
    }
}

TEST_CASE("findings serialize to the documented JSON-lines schema") {
    auto doc = parse_dockerfile(kPythonSlimBasic);
    auto result = lint(doc, builtin_catalog());
    REQUIRE(!result.findings.empty());
    auto line = finding_to_json_line(result.findings.front(), "Dockerfile");
    auto j = nlohmann::json::parse(line);
    for (const char* key :
         {"rule_id", "category", "severity", "file", "line_start", "line_end", "message",
          "fixable"}) {
        CAPTURE(key);
        CHECK(j.contains(key));
    }
    CHECK(j.size() == 8);
    CHECK(j["file"] == "Dockerfile");
}

TEST_CASE("lint: pinned installs do not fire the version-pin rule") {
    auto doc = parse_dockerfile(kPythonSlimPinned);
    auto ids = rule_ids(lint(doc, builtin_catalog()).findings);
    CHECK(ids.count("DR002") == 0);
    CHECK(ids.count("DR001") == 0);  // digest present
    CHECK(ids.count("DR007") == 0);  // epoch wired through

    auto apt = parse_dockerfile("FROM debian\nRUN apt-get install -y curl=8.5.0-2\n");
    CHECK(rule_ids(lint(apt, builtin_catalog()).findings).count("DR002") == 0);
    auto npm = parse_dockerfile("FROM node\nRUN npm install husky@9.1.0 @scope/pkg@2.0.0\n");
    CHECK(rule_ids(lint(npm, builtin_catalog()).findings).count("DR002") == 0);
}

TEST_CASE("fix: epoch wiring inserts immediately after the first FROM") {
    auto doc = parse_dockerfile(kPythonSlimBasic);
    std::vector<Finding> dr007;
    for (const auto& f : lint(doc, builtin_catalog()).findings) {
        if (f.rule_id == "DR007") dr007.push_back(f);
    }
    REQUIRE(dr007.size() == 1);
    auto outcome = apply_fixes(doc, dr007);
    const auto& ins = outcome.doc.instructions();
    REQUIRE(ins.size() == 5);
    CHECK(ins[0].kind == InstructionKind::From);
    CHECK(ins[1].kind == InstructionKind::Arg);
    CHECK(ins[1].pairs[0].key == "SOURCE_DATE_EPOCH");
    CHECK(ins[2].kind == InstructionKind::Env);
    CHECK(ins[2].pairs[0].key == "SOURCE_DATE_EPOCH");
    // Untouched instructions keep their bytes.
    CHECK(ins[3].raw_text == doc.instructions()[1].raw_text);
    CHECK(ins[4].raw_text == doc.instructions()[2].raw_text);
}

TEST_CASE("lint: documents can be linted concurrently") {
    auto catalog = builtin_catalog();
    std::vector<std::thread> workers;
    std::array<std::size_t, 4> counts{};
    const char* docs[] = {kPythonSlimBasic, kCudaPipStack, kNodeGlobalInstall,
                          kHardenedTemplate};
    for (int t = 0; t < 4; ++t) {
        workers.emplace_back([&, t]() {
            for (int i = 0; i < 50; ++i) {
                auto doc = parse_dockerfile(docs[t]);
                counts[static_cast<std::size_t>(t)] +=
                    lint(doc, catalog).findings.size();
            }
        });
    }
    for (auto& w : workers) w.join();
    // Each thread sees a deterministic per-document finding count.
    auto expect = [&catalog](const char* text) {
        return lint(parse_dockerfile(text), catalog).findings.size() * 50;
    };
    for (int t = 0; t < 4; ++t) {
        CHECK(counts[static_cast<std::size_t>(t)] == expect(docs[t]));
    }
}
