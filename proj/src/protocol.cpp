/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/protocol.hpp"

#include <algorithm>
#include <cctype>
#include <random>

#include "reprodock/process.hpp"

namespace reprodock {

namespace {

// Priority classes for Dockerfile selection.
int path_rank(std::string_view path) {
    auto slash = path.find('/');
    if (slash == std::string_view::npos) return 0;            // root level
    if (path.substr(0, slash) == "docker") return 1;          // under docker/
    return 2;
}

std::string_view final_component(std::string_view path) {
    auto slash = path.rfind('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

// Days since 1970-01-01 for a civil date (proleptic Gregorian).
std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct TimestampParser {
    std::string_view s;
    std::size_t pos = 0;

    [[noreturn]] void fail(const std::string& why) const {
        throw MalformedTimestamp("malformed timestamp '" + std::string(s) + "': " + why);
    }
    int digits(int count) {
        int v = 0;
        for (int i = 0; i < count; ++i) {
            if (pos >= s.size() || !std::isdigit(static_cast<unsigned char>(s[pos]))) {
                fail("expected digit");
            }
            v = v * 10 + (s[pos++] - '0');
        }
        return v;
    }
    void expect(char c) {
        if (pos >= s.size() || s[pos] != c) fail(std::string("expected '") + c + "'");
        ++pos;
    }
    bool peek(char c) const { return pos < s.size() && s[pos] == c; }
};

std::string digest_line_value(const std::string& output) {
    // Last non-empty line must be "digest: sha256:<hex>".
    std::size_t end = output.find_last_not_of("\r\n \t");
    if (end == std::string::npos) return "";
    std::size_t begin = output.find_last_of('\n', end);
    begin = begin == std::string::npos ? 0 : begin + 1;
    std::string line = output.substr(begin, end - begin + 1);
    constexpr std::string_view kPrefix = "digest: ";
    if (line.rfind(kPrefix, 0) != 0) return "";
    return line.substr(kPrefix.size());
}

std::string tail_of(const std::string& text, std::size_t max_bytes = 2048) {
    if (text.size() <= max_bytes) return text;
    return "..." + text.substr(text.size() - max_bytes);
}

BuildOutcome run_one_build(Builder& builder, const BuildSpec& spec) {
    BuildOutcome outcome = builder.build(spec);
    if (outcome.status == BuildStatus::Success && !outcome.image_digest) {
        throw BuilderContractViolation(
            "builder reported success without a digest line; log: " + outcome.log_excerpt);
    }
    return outcome;
}

}  // namespace

std::string_view build_status_name(BuildStatus s) {
    switch (s) {
        case BuildStatus::Success: return "success";
        case BuildStatus::BuildError: return "build-error";
        case BuildStatus::Timeout: return "timeout";
    }
    return "";
}

std::string_view verdict_name(Verdict v) {
    switch (v) {
        case Verdict::NotBuildable: return "NotBuildable";
        case Verdict::BitwiseReproducible: return "BitwiseReproducible";
        case Verdict::InfraReproducible: return "InfraReproducible";
        case Verdict::SemanticallyReproducible: return "SemanticallyReproducible";
        case Verdict::NonReproducible: return "NonReproducible";
    }
    return "";
}

std::optional<Verdict> verdict_from_name(std::string_view name) {
    for (auto v : {Verdict::NotBuildable, Verdict::BitwiseReproducible, Verdict::InfraReproducible,
                   Verdict::SemanticallyReproducible, Verdict::NonReproducible}) {
        if (verdict_name(v) == name) return v;
    }
    return std::nullopt;
}

std::string select_dockerfile(const std::vector<std::string>& candidates) {
    const std::string* best = nullptr;
    for (const auto& c : candidates) {
        if (final_component(c).find("Dockerfile") == std::string_view::npos) continue;
        if (best == nullptr) {
            best = &c;
            continue;
        }
        int rc = path_rank(c);
        int rb = path_rank(*best);
        if (rc < rb || (rc == rb && c < *best)) best = &c;
    }
    if (best == nullptr) {
        throw NoCandidates("no Dockerfile candidates");
    }
    return *best;
}

std::int64_t derive_epoch(std::string_view iso8601) {
    TimestampParser p{iso8601};
    int year = p.digits(4);
    p.expect('-');
    int month = p.digits(2);
    p.expect('-');
    int day = p.digits(2);
    if (p.peek('T') || p.peek('t') || p.peek(' ')) {
        ++p.pos;
    } else {
        p.fail("expected date/time separator");
    }
    int hour = p.digits(2);
    p.expect(':');
    int minute = p.digits(2);
    p.expect(':');
    int second = p.digits(2);
    if (p.peek('.')) {  // fractional seconds: truncate
        ++p.pos;
        while (p.pos < p.s.size() && std::isdigit(static_cast<unsigned char>(p.s[p.pos]))) {
            ++p.pos;
        }
    }
    std::int64_t offset = 0;
    if (p.pos >= p.s.size()) {
        p.fail("missing zone designator");
    } else if (p.s[p.pos] == 'Z' || p.s[p.pos] == 'z') {
        ++p.pos;
    } else if (p.s[p.pos] == '+' || p.s[p.pos] == '-') {
        int sign = p.s[p.pos] == '+' ? 1 : -1;
        ++p.pos;
        int oh = p.digits(2);
        int om = 0;
        if (p.peek(':')) ++p.pos;
        if (p.pos < p.s.size() && std::isdigit(static_cast<unsigned char>(p.s[p.pos]))) {
            om = p.digits(2);
        }
        offset = sign * (oh * 3600 + om * 60);
    } else {
        p.fail("bad zone designator");
    }
    if (p.pos != p.s.size()) p.fail("trailing characters");
    if (month < 1 || month > 12 || day < 1 || day > 31 || hour > 23 || minute > 59 ||
        second > 60) {
        p.fail("field out of range");
    }
    std::int64_t days = days_from_civil(year, static_cast<unsigned>(month),
                                        static_cast<unsigned>(day));
    return days * 86400 + hour * 3600 + minute * 60 + second - offset;
}

CommandBuilder::CommandBuilder(std::string command) : command_(std::move(command)) {}

BuildOutcome CommandBuilder::build(const BuildSpec& spec) {
    std::vector<std::string> argv = {command_, spec.context_dir.string(),
                                     spec.dockerfile_path.string(), spec.output_path.string()};
    std::vector<std::pair<std::string, std::string>> env;
    env.emplace_back("HARDENED", spec.hardened ? "1" : "0");
    if (spec.hardened && spec.source_date_epoch) {
        env.emplace_back("SOURCE_DATE_EPOCH", std::to_string(*spec.source_date_epoch));
    }
    ProcessResult pr = run_process(argv, env, spec.timeout_seconds);

    BuildOutcome outcome;
    outcome.log_excerpt = tail_of(pr.err.empty() ? pr.out : pr.err);
    if (pr.timed_out) {
        outcome.status = BuildStatus::Timeout;
        return outcome;
    }
    if (pr.exit_code != 0) {
        outcome.status = BuildStatus::BuildError;
        return outcome;
    }
    outcome.status = BuildStatus::Success;
    outcome.image_path = spec.output_path;
    std::string digest_text = digest_line_value(pr.out);
    if (!digest_text.empty()) {
        try {
            outcome.image_digest = Digest::parse(digest_text);
        } catch (const MalformedDigest&) {
            // Left unset; run_protocol reports the contract violation.
        }
    }
    return outcome;
}

std::vector<std::string> find_dockerfiles(const std::filesystem::path& context_dir) {
    std::vector<std::string> out;
    if (!std::filesystem::is_directory(context_dir)) return out;
    for (auto it = std::filesystem::recursive_directory_iterator(context_dir);
         it != std::filesystem::recursive_directory_iterator(); ++it) {
        if (it->is_directory() && it->path().filename() == ".git") {
            it.disable_recursion_pending();
            continue;
        }
        if (!it->is_regular_file()) continue;
        std::string name = it->path().filename().string();
        if (name.find("Dockerfile") == std::string::npos) continue;
        out.push_back(std::filesystem::relative(it->path(), context_dir).generic_string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

ProtocolTrace run_protocol(Builder& builder, const std::filesystem::path& context_dir,
                           std::int64_t epoch, const ProtocolOptions& options) {
    ProtocolTrace trace;
    trace.selected_dockerfile = select_dockerfile(find_dockerfiles(context_dir));

    std::filesystem::path work = options.work_dir;
    if (work.empty()) {
        static std::mt19937_64 rng{std::random_device{}()};
        work = std::filesystem::temp_directory_path() /
               ("repro-" + std::to_string(rng()));
    }
    std::filesystem::create_directories(work);

    auto build_once = [&](bool hardened, int number) {
        BuildSpec spec;
        spec.context_dir = context_dir;
        spec.dockerfile_path = context_dir / trace.selected_dockerfile;
        spec.hardened = hardened;
        if (hardened) spec.source_date_epoch = epoch;
        spec.disable_cache = true;
        spec.timeout_seconds = options.timeout_seconds;
        spec.output_path = work / ("build-" + std::to_string(number));
        BuildOutcome outcome = run_one_build(builder, spec);
        trace.builds.emplace_back(spec, outcome);
        return outcome;
    };

    // Step 1: two clean builds.
    BuildOutcome clean_a = build_once(false, 1);
    BuildOutcome clean_b = build_once(false, 2);
    if (clean_a.status != BuildStatus::Success || clean_b.status != BuildStatus::Success) {
        trace.verdict = Verdict::NotBuildable;
        trace.failure_reason =
            std::string("clean build failed: ") +
            std::string(build_status_name(clean_a.status == BuildStatus::Success
                                              ? clean_b.status
                                              : clean_a.status));
        return trace;
    }
    trace.digest_pairs.emplace_back(*clean_a.image_digest, *clean_b.image_digest);

    // Step 2: identical digests without any help.
    if (*clean_a.image_digest == *clean_b.image_digest) {
        trace.verdict = Verdict::BitwiseReproducible;
        return trace;
    }

    // Step 3: two hardened builds.
    BuildOutcome hard_a = build_once(true, 3);
    BuildOutcome hard_b = build_once(true, 4);
    if (hard_a.status != BuildStatus::Success || hard_b.status != BuildStatus::Success) {
        trace.verdict = Verdict::NotBuildable;
        trace.failure_reason =
            std::string("hardened build failed: ") +
            std::string(build_status_name(hard_a.status == BuildStatus::Success
                                              ? hard_b.status
                                              : hard_a.status));
        return trace;
    }
    trace.digest_pairs.emplace_back(*hard_a.image_digest, *hard_b.image_digest);
    if (*hard_a.image_digest == *hard_b.image_digest) {
        trace.verdict = Verdict::InfraReproducible;
        return trace;
    }

    // Step 4: per-file comparison of the hardened pair.
    Image img_a = Image::load(hard_a.image_path);
    Image img_b = Image::load(hard_b.image_path);
    trace.diff_report = build_report(img_a, img_b);
    trace.verdict = trace.diff_report->semantic_equal ? Verdict::SemanticallyReproducible
                                                      : Verdict::NonReproducible;
    return trace;
}

VerdictCounts aggregate_verdicts(const std::vector<Verdict>& verdicts) {
    VerdictCounts out;
    for (auto v : verdicts) {
        ++out.counts[v];
        ++out.total;
    }
    return out;
}

VerdictCounts aggregate_verdicts(const std::vector<ProtocolTrace>& traces) {
    std::vector<Verdict> verdicts;
    verdicts.reserve(traces.size());
    for (const auto& t : traces) verdicts.push_back(t.verdict);
    return aggregate_verdicts(verdicts);
}

nlohmann::json trace_to_json(const ProtocolTrace& trace) {
    // Fixed schema: every key is always present; absent values are null.
    nlohmann::json j;
    j["selected_dockerfile"] = trace.selected_dockerfile;
    j["verdict"] = std::string(verdict_name(trace.verdict));
    j["failure_reason"] = trace.failure_reason;
    j["builds"] = nlohmann::json::array();
    for (const auto& [spec, outcome] : trace.builds) {
        nlohmann::json bj;
        bj["hardened"] = spec.hardened;
        bj["disable_cache"] = spec.disable_cache;
        bj["timeout_seconds"] = spec.timeout_seconds;
        bj["source_date_epoch"] = spec.source_date_epoch
                                      ? nlohmann::json(*spec.source_date_epoch)
                                      : nlohmann::json(nullptr);
        bj["dockerfile"] = spec.dockerfile_path.string();
        bj["status"] = std::string(build_status_name(outcome.status));
        bj["digest"] = outcome.image_digest ? nlohmann::json(outcome.image_digest->prefixed())
                                            : nlohmann::json(nullptr);
        bj["image_path"] = outcome.image_path.string();
        bj["log_excerpt"] = outcome.log_excerpt;
        j["builds"].push_back(std::move(bj));
    }
    j["digest_pairs"] = nlohmann::json::array();
    for (const auto& [a, b] : trace.digest_pairs) {
        j["digest_pairs"].push_back({a.prefixed(), b.prefixed()});
    }
    j["diff_report"] = trace.diff_report ? report_to_json(*trace.diff_report)
                                         : nlohmann::json(nullptr);
    return j;
}

}  // namespace reprodock
