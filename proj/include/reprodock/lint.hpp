/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reprodock/digest.hpp"
#include "reprodock/dockerfile.hpp"
#include "reprodock/taxonomy.hpp"

namespace reprodock {

enum class Severity { Error, Warning, Info };

std::string_view severity_name(Severity s);

enum class FixKind {
    AppendToSegmentChain,
    AddFlagToCommand,
    InsertInstructionsAfter,
    ReplaceImageRef,
};

struct FixAction {
    FixKind kind = FixKind::AppendToSegmentChain;
    // Target instruction at the time the finding was produced.
    std::size_t instruction_index = 0;
    int segment_index = -1;  // AddFlagToCommand
    // AppendToSegmentChain: command to append with " && ".
    // AddFlagToCommand: the flag text.
    // ReplaceImageRef: the full replacement image reference.
    std::string text;
    std::string anchor;               // AddFlagToCommand: token the flag follows
    std::vector<std::string> lines;   // InsertInstructionsAfter
};

struct Rule {
    std::string id;  // stable, DR001...
    RootCauseCategory category = RootCauseCategory::ApplicationSpecific;
    std::string title;
    Severity severity = Severity::Warning;
    bool fixable = false;
};

struct Finding {
    std::string rule_id;
    LineSpan span;
    std::string message;
    RootCauseCategory category = RootCauseCategory::ApplicationSpecific;
    Severity severity = Severity::Warning;
    bool fixable = false;
    std::optional<FixAction> fix;
    std::size_t instruction_index = 0;
};

// Digest pin map: "repository:tag sha256:<64 hex>" per line. '#' comments and
// blank lines are skipped. Lookups never touch the network.
class PinMap {
public:
    static PinMap load_file(const std::string& path);
    static PinMap parse(std::string_view text);  // throws Error with line numbers

    void insert(std::string_view repository, std::string_view tag, const Digest& digest);
    std::optional<Digest> lookup(std::string_view repository, std::string_view tag) const;
    bool empty() const { return entries_.empty(); }

private:
    std::map<std::string, Digest> entries_;  // key: "repository:tag"
};

// The built-in rule catalog, DR001..DR013. Ids are stable and never reused.
std::vector<Rule> builtin_catalog();

const Rule* find_rule(const std::vector<Rule>& catalog, std::string_view id);

struct LintOptions {
    // Enables the DR001 autofix; without it the finding carries no FixAction.
    const PinMap* pin_map = nullptr;
};

struct LintResult {
    std::vector<Finding> findings;       // sorted by (line_span.start, rule_id)
    std::vector<std::string> notes;      // rules skipped (e.g. unterminated quotes)
};

LintResult lint(const DockerfileDoc& doc, const std::vector<Rule>& catalog,
                const LintOptions& options = {});

struct FixOutcome {
    DockerfileDoc doc;
    std::vector<Finding> unfixed;  // findings without a FixAction, returned unapplied
    int applied = 0;
};

// Applies every finding's FixAction. Untouched instructions stay
// byte-identical; applying the same findings again is a byte-exact no-op.
// Fixes are applied in line order; later ones are re-anchored after each edit.
FixOutcome apply_fixes(const DockerfileDoc& doc, const std::vector<Finding>& findings);

// One JSON-lines record:
// {rule_id, category, severity, file, line_start, line_end, message, fixable}
std::string finding_to_json_line(const Finding& f, std::string_view file);

}  // namespace reprodock
