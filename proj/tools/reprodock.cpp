/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "reprodock/aggregate.hpp"
#include "reprodock/diff.hpp"
#include "reprodock/lint.hpp"
#include "reprodock/process.hpp"
#include "reprodock/protocol.hpp"

namespace {

using namespace reprodock;

constexpr int kExitClean = 0;
constexpr int kExitFindings = 1;
constexpr int kExitOperational = 2;
constexpr int kExitSemanticEqual = 3;
constexpr int kExitSemanticDiff = 4;

bool g_quiet = false;

void say(const std::string& line) {
    if (!g_quiet) std::cout << line << "\n";
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot read file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Writes via a temporary file and rename, so a failure never leaves a
// partially written output behind.
void write_text_file_atomic(const std::string& path, const std::string& text) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write file: " + tmp);
        }
        out << text;
        if (!out) {
            throw Error("write failed: " + tmp);
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw Error("cannot replace " + path + ": " + ec.message());
    }
}

std::vector<Rule> catalog_subset(const std::string& rules_csv) {
    auto all = builtin_catalog();
    if (rules_csv.empty()) return all;
    std::vector<Rule> subset;
    std::stringstream ss(rules_csv);
    std::string id;
    while (std::getline(ss, id, ',')) {
        if (id.empty()) continue;
        const Rule* r = find_rule(all, id);
        if (r == nullptr) {
            throw Error("unknown rule id: " + id);
        }
        subset.push_back(*r);
    }
    return subset;
}

int cmd_lint(const std::vector<std::string>& paths, const std::string& rules_csv,
             const std::string& format, const std::string& exit_policy,
             const std::string& pin_map_path) {
    auto catalog = catalog_subset(rules_csv);
    PinMap pins;
    LintOptions options;
    if (!pin_map_path.empty()) {
        pins = PinMap::load_file(pin_map_path);
        options.pin_map = &pins;
    }

    bool any_error = false;
    bool any_warning = false;
    for (const auto& path : paths) {
        DockerfileDoc doc = DockerfileDoc::parse(read_text_file(path));
        LintResult result = lint(doc, catalog, options);
        for (const auto& note : result.notes) {
            std::cerr << path << ": note: " << note << "\n";
        }
        for (const auto& f : result.findings) {
            if (f.severity == Severity::Error) any_error = true;
            if (f.severity == Severity::Warning) any_warning = true;
            if (format == "json") {
                std::cout << finding_to_json_line(f, path) << "\n";
            } else {
                std::cout << path << ":" << f.span.start << "-" << f.span.end << ": "
                          << severity_name(f.severity) << " " << f.rule_id << ": " << f.message
                          << (f.fixable ? " [fixable]" : "") << "\n";
            }
        }
    }
    if (exit_policy == "fail-on-error" && any_error) return kExitFindings;
    if (exit_policy == "fail-on-warning" && (any_error || any_warning)) return kExitFindings;
    return kExitClean;
}

int cmd_fix(const std::string& path, bool in_place, const std::string& output,
            const std::string& pin_map_path) {
    DockerfileDoc doc = DockerfileDoc::parse(read_text_file(path));
    PinMap pins;
    LintOptions options;
    if (!pin_map_path.empty()) {
        pins = PinMap::load_file(pin_map_path);
        options.pin_map = &pins;
    }
    LintResult result = lint(doc, builtin_catalog(), options);
    FixOutcome outcome = apply_fixes(doc, result.findings);

    std::string target = in_place ? path : output;
    write_text_file_atomic(target, outcome.doc.render());
    say(std::to_string(outcome.applied) + " fixes applied");
    for (const auto& f : outcome.unfixed) {
        if (f.fixable) {
            say("left unfixed: " + f.rule_id + " at line " + std::to_string(f.span.start) +
                (f.rule_id == "DR001" ? " (no pin-map entry)" : ""));
        }
    }
    return kExitClean;
}

int cmd_diff(const std::string& image_a, const std::string& image_b, const std::string& format,
             bool semantic_only) {
    Image a = Image::load(image_a);
    Image b = Image::load(image_b);

    if (images_bitwise_equal(a, b)) {
        if (format == "json") {
            DiffReport report = build_report(a, b);
            std::cout << report_to_json(report).dump(2) << "\n";
        } else {
            say("images are bitwise identical");
        }
        return kExitClean;
    }

    DiffReport report = build_report(a, b);
    if (format == "json") {
        std::cout << report_to_json(report).dump(2) << "\n";
    } else {
        std::cout << report_to_text(report, semantic_only);
    }
    return report.semantic_equal ? kExitSemanticEqual : kExitSemanticDiff;
}

std::int64_t resolve_epoch(const std::string& epoch_arg, const std::string& context_dir) {
    if (epoch_arg != "auto") {
        try {
            std::size_t used = 0;
            std::int64_t v = std::stoll(epoch_arg, &used);
            if (used != epoch_arg.size()) {
                throw Error("--epoch must be an integer or 'auto'");
            }
            return v;
        } catch (const std::exception&) {
            throw Error("--epoch must be an integer or 'auto'");
        }
    }
    // Latest commit timestamp from the context's version control, when any.
    ProcessResult pr = run_process({"git", "-C", context_dir, "log", "-1", "--format=%cI"}, {}, 30);
    if (pr.exit_code == 0) {
        std::string line = pr.out;
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
        if (!line.empty()) {
            try {
                return derive_epoch(line);
            } catch (const MalformedTimestamp&) {
            }
        }
    }
    return 0;
}

int cmd_verify(const std::string& context_dir, const std::string& builder_cmd,
               const std::string& epoch_arg, const std::string& report_path,
               const std::string& format, int timeout_seconds, const std::string& work_dir) {
    {
        // The adapter must exist up front; a misspelled command is an
        // operational error, not a NotBuildable verdict.
        bool exists = std::filesystem::exists(builder_cmd);
        if (!exists && builder_cmd.find('/') == std::string::npos) {
            ProcessResult which = run_process({"which", builder_cmd}, {}, 10);
            exists = which.exit_code == 0;
        }
        if (!exists) {
            throw Error("builder command not found: " + builder_cmd);
        }
    }
    std::int64_t epoch = resolve_epoch(epoch_arg, context_dir);
    CommandBuilder builder(builder_cmd);
    ProtocolOptions options;
    options.timeout_seconds = timeout_seconds;
    if (!work_dir.empty()) options.work_dir = work_dir;
    ProtocolTrace trace = run_protocol(builder, context_dir, epoch, options);

    nlohmann::json tj = trace_to_json(trace);
    if (!report_path.empty()) {
        write_text_file_atomic(report_path, tj.dump(2) + "\n");
    }
    if (format == "json") {
        std::cout << tj.dump(2) << "\n";
    } else {
        say(std::string(verdict_name(trace.verdict)));
        if (!trace.failure_reason.empty()) say("reason: " + trace.failure_reason);
    }
    switch (trace.verdict) {
        case Verdict::BitwiseReproducible:
        case Verdict::InfraReproducible:
        case Verdict::SemanticallyReproducible:
            return kExitClean;
        case Verdict::NonReproducible:
            return kExitSemanticDiff;
        case Verdict::NotBuildable:
            return kExitOperational;
    }
    return kExitOperational;
}

int cmd_aggregate(const std::string& records_path, const std::string& format) {
    std::ifstream in(records_path, std::ios::binary);
    if (!in) {
        throw Error("cannot read records file: " + records_path);
    }
    std::vector<CorpusRecord> records = read_records_jsonl(in);
    CorpusSummary summary = aggregate(records);
    std::cout << render_summary(summary, format == "json");
    return kExitClean;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Dockerfile reproducibility toolkit: lint and fix Dockerfiles, compare "
                 "container images, verify rebuild reproducibility, aggregate corpus results"};
    app.set_version_flag("--version", "reprodock 0.1.0");
    app.add_flag("--quiet", g_quiet, "Suppress informational output");
    app.require_subcommand(1);
    app.fallthrough();

    std::string format = "text";

    auto* lint_cmd = app.add_subcommand("lint", "Check Dockerfiles for non-reproducibility "
                                                "patterns");
    std::vector<std::string> lint_paths;
    std::string lint_rules;
    std::string lint_policy = "report-only";
    std::string lint_pin_map;
    lint_cmd->add_option("paths", lint_paths, "Dockerfile paths")->required();
    lint_cmd->add_option("--rules", lint_rules, "Comma-separated rule ids (default: all)");
    lint_cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"text", "json"}));
    lint_cmd->add_option("--exit-policy", lint_policy, "Exit-code policy")
        ->check(CLI::IsMember({"report-only", "fail-on-error", "fail-on-warning"}));
    lint_cmd->add_option("--pin-map", lint_pin_map, "Tag-to-digest pin map file");

    auto* fix_cmd = app.add_subcommand("fix", "Rewrite a Dockerfile with the known fixes");
    std::string fix_path;
    std::string fix_output;
    std::string fix_pin_map;
    bool fix_in_place = false;
    fix_cmd->add_option("path", fix_path, "Dockerfile path")->required();
    auto* in_place_opt = fix_cmd->add_flag("--in-place", fix_in_place, "Rewrite the input file");
    auto* output_opt = fix_cmd->add_option("--output", fix_output, "Write the result here");
    in_place_opt->excludes(output_opt);
    fix_cmd->add_option("--pin-map", fix_pin_map, "Tag-to-digest pin map file (enables the "
                                                  "base-image pin fix)");

    auto* diff_cmd = app.add_subcommand("diff", "Compare two container images layer by layer "
                                                "and file by file");
    std::string diff_a;
    std::string diff_b;
    bool semantic_only = false;
    diff_cmd->add_option("image_a", diff_a, "First image (OCI layout dir or save tarball)")
        ->required();
    diff_cmd->add_option("image_b", diff_b, "Second image")->required();
    diff_cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"text", "json"}));
    diff_cmd->add_flag("--semantic-only", semantic_only,
                       "Hide metadata-only differences from the listing");

    auto* verify_cmd = app.add_subcommand("verify", "Rebuild twice (plus hardened rebuilds) and "
                                                    "classify reproducibility");
    std::string verify_context;
    std::string verify_builder;
    std::string verify_epoch = "auto";
    std::string verify_report;
    std::string verify_work_dir;
    int verify_timeout = 1800;
    verify_cmd->add_option("context_dir", verify_context, "Build context directory")->required();
    verify_cmd->add_option("--builder", verify_builder, "Builder adapter command")->required();
    verify_cmd->add_option("--epoch", verify_epoch,
                           "SOURCE_DATE_EPOCH as integer seconds, or 'auto' (latest commit "
                           "timestamp, else 0)");
    verify_cmd->add_option("--report", verify_report, "Write the protocol trace JSON here");
    verify_cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"text", "json"}));
    verify_cmd->add_option("--timeout", verify_timeout, "Per-build timeout in seconds");
    verify_cmd->add_option("--work-dir", verify_work_dir,
                           "Directory for intermediate build images (default: system temp)");

    auto* agg_cmd = app.add_subcommand("aggregate", "Summarize verdict records into outcome and "
                                                    "root-cause tables");
    std::string agg_records;
    agg_cmd->add_option("records", agg_records, "JSON-lines records file")->required();
    agg_cmd->add_option("--format", format, "Output format")
        ->check(CLI::IsMember({"text", "json"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitOperational;
    }

    try {
        if (lint_cmd->parsed()) {
            return cmd_lint(lint_paths, lint_rules, format, lint_policy, lint_pin_map);
        }
        if (fix_cmd->parsed()) {
            if (!fix_in_place && fix_output.empty()) {
                std::cerr << "fix: one of --in-place or --output is required\n";
                return kExitOperational;
            }
            return cmd_fix(fix_path, fix_in_place, fix_output, fix_pin_map);
        }
        if (diff_cmd->parsed()) {
            return cmd_diff(diff_a, diff_b, format, semantic_only);
        }
        if (verify_cmd->parsed()) {
            return cmd_verify(verify_context, verify_builder, verify_epoch, verify_report, format,
                              verify_timeout, verify_work_dir);
        }
        if (agg_cmd->parsed()) {
            return cmd_aggregate(agg_records, format);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperational;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitOperational;
    }
    return kExitOperational;
}
