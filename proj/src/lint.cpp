/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/lint.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

namespace reprodock {

namespace {

std::string_view basename_of(std::string_view path) {
    auto slash = path.rfind('/');
    return slash == std::string_view::npos ? path : path.substr(slash + 1);
}

std::string_view program_of(const SimpleCommand& seg) {
    if (seg.argv.empty()) return {};
    return basename_of(seg.argv[0]);
}

bool has_arg(const SimpleCommand& seg, std::string_view arg) {
    return std::find(seg.argv.begin(), seg.argv.end(), arg) != seg.argv.end();
}

bool starts_with(std::string_view s, std::string_view prefix) {
    return s.substr(0, prefix.size()) == prefix;
}

// First non-flag argument after argv[0], skipping values of flags in
// value_flags. Returns its argv index.
std::optional<std::size_t> subcommand_pos(const SimpleCommand& seg,
                                          std::initializer_list<std::string_view> value_flags) {
    for (std::size_t j = 1; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (!a.empty() && a[0] == '-') {
            for (auto vf : value_flags) {
                if (a == vf) {
                    ++j;  // skip the flag's value
                    break;
                }
            }
            continue;
        }
        return j;
    }
    return std::nullopt;
}

// apt-get / apt with the given subcommand.
std::optional<std::size_t> apt_subcommand_pos(const SimpleCommand& seg, std::string_view sub) {
    auto prog = program_of(seg);
    if (prog != "apt-get" && prog != "apt") return std::nullopt;
    auto pos = subcommand_pos(seg, {"-o", "-t", "-c"});
    if (pos && seg.argv[*pos] == sub) return pos;
    return std::nullopt;
}

std::optional<std::size_t> apt_install_pos(const SimpleCommand& seg) {
    return apt_subcommand_pos(seg, "install");
}

bool is_apt_upgrade(const SimpleCommand& seg) {
    for (auto sub : {"upgrade", "dist-upgrade", "full-upgrade"}) {
        if (apt_subcommand_pos(seg, sub)) return true;
    }
    return false;
}

// pip install, either invoked directly or through "python -m pip".
std::optional<std::size_t> pip_install_pos(const SimpleCommand& seg) {
    auto prog = program_of(seg);
    std::size_t start = 0;
    if (starts_with(prog, "pip")) {
        start = 1;
    } else if (starts_with(prog, "python")) {
        for (std::size_t j = 1; j + 1 < seg.argv.size(); ++j) {
            if (seg.argv[j] == "-m" && starts_with(seg.argv[j + 1], "pip")) {
                start = j + 2;
                break;
            }
        }
        if (start == 0) return std::nullopt;
    } else {
        return std::nullopt;
    }
    for (std::size_t j = start; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (!a.empty() && a[0] == '-') continue;
        return a == "install" ? std::optional<std::size_t>(j) : std::nullopt;
    }
    return std::nullopt;
}

std::optional<std::size_t> npm_subcommand_pos(const SimpleCommand& seg) {
    if (program_of(seg) != "npm") return std::nullopt;
    return subcommand_pos(seg, {"--cache", "--prefix", "--registry"});
}

bool is_npm_install(const SimpleCommand& seg, std::size_t* sub_pos = nullptr) {
    auto pos = npm_subcommand_pos(seg);
    if (!pos) return false;
    const std::string& sub = seg.argv[*pos];
    if (sub != "install" && sub != "i" && sub != "ci" && sub != "add") return false;
    if (sub_pos != nullptr) *sub_pos = *pos;
    return true;
}

bool is_npm_cache_clean(const SimpleCommand& seg) {
    return program_of(seg) == "npm" && has_arg(seg, "cache") && has_arg(seg, "clean");
}

std::optional<std::size_t> go_build_pos(const SimpleCommand& seg) {
    if (program_of(seg) != "go") return std::nullopt;
    auto pos = subcommand_pos(seg, {});
    if (pos && seg.argv[*pos] == "build") return pos;
    return std::nullopt;
}

// Any system package-manager install (apt family, apk, yum/dnf, zypper).
bool is_system_install(const SimpleCommand& seg) {
    if (apt_install_pos(seg)) return true;
    auto prog = program_of(seg);
    auto pos = subcommand_pos(seg, {"-o", "-t", "-c"});
    if (!pos) return false;
    const std::string& sub = seg.argv[*pos];
    if (prog == "apk" && sub == "add") return true;
    if ((prog == "yum" || prog == "dnf" || prog == "microdnf") && sub == "install") return true;
    if (prog == "zypper" && (sub == "install" || sub == "in")) return true;
    return false;
}

std::vector<std::string_view> rm_targets(const SimpleCommand& seg) {
    std::vector<std::string_view> out;
    if (program_of(seg) != "rm") return out;
    for (std::size_t j = 1; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (!a.empty() && a[0] == '-') continue;
        out.push_back(a);
    }
    return out;
}

bool chain_removes_prefix(const ShellCommand& cmd, std::string_view prefix) {
    for (const auto& seg : cmd.segments) {
        for (auto t : rm_targets(seg)) {
            if (starts_with(t, prefix)) return true;
        }
    }
    return false;
}

bool chain_resets_machine_id(const ShellCommand& cmd) {
    for (const auto& seg : cmd.segments) {
        if (program_of(seg) == "truncate" && has_arg(seg, "/etc/machine-id")) return true;
        for (auto t : rm_targets(seg)) {
            if (t == "/etc/machine-id") return true;
        }
    }
    return false;
}

bool chain_cleans_pycache(const ShellCommand& cmd) {
    for (const auto& seg : cmd.segments) {
        auto prog = program_of(seg);
        if (prog == "find") {
            bool pycache = false;
            bool removes = false;
            for (const auto& a : seg.argv) {
                if (a.find("__pycache__") != std::string::npos) pycache = true;
                if (a == "rm" || a == "-delete") removes = true;
            }
            if (pycache && removes) return true;
        }
        for (auto t : rm_targets(seg)) {
            if (t.find("__pycache__") != std::string_view::npos) return true;
        }
    }
    return false;
}

std::optional<std::string> npm_cache_dir(const SimpleCommand& seg) {
    for (std::size_t j = 1; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (a == "--cache" && j + 1 < seg.argv.size()) return seg.argv[j + 1];
        if (starts_with(a, "--cache=")) return a.substr(std::string_view("--cache=").size());
    }
    return std::nullopt;
}

// Value-taking flags of `pip install` whose values must not be mistaken for
// package specs.
bool pip_value_flag(std::string_view a) {
    static const std::set<std::string_view> flags = {
        "-r", "--requirement", "-c", "--constraint",   "-i",       "--index-url",
        "--extra-index-url",   "-f", "--find-links",   "-t",       "--target",
        "--cache-dir",         "-e", "--editable",     "--prefix", "--root",
        "--platform",          "--abi", "--implementation", "--python-version",
    };
    return flags.count(a) > 0;
}

struct UnpinnedArgs {
    std::vector<std::string> names;

    void add(const std::string& n) {
        if (names.size() < 6) names.push_back(n);
    }
};

void collect_pip_unpinned(const SimpleCommand& seg, std::size_t install_pos, UnpinnedArgs& out) {
    for (std::size_t j = install_pos + 1; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (!a.empty() && a[0] == '-') {
            // Requirement-file installs are exempt: pins live in the file.
            if (pip_value_flag(a)) ++j;
            continue;
        }
        if (a.find("==") == std::string::npos) out.add(a);
    }
}

void collect_npm_unpinned(const SimpleCommand& seg, std::size_t sub_pos, UnpinnedArgs& out) {
    for (std::size_t j = sub_pos + 1; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (!a.empty() && a[0] == '-') {
            if (a == "--cache" || a == "--prefix" || a == "--registry") ++j;
            continue;
        }
        std::string_view name = a;
        if (!name.empty() && name[0] == '@') name.remove_prefix(1);  // scoped package
        if (name.find('@') == std::string_view::npos) out.add(a);
    }
}

void collect_apt_unpinned(const SimpleCommand& seg, std::size_t install_pos, UnpinnedArgs& out) {
    for (std::size_t j = install_pos + 1; j < seg.argv.size(); ++j) {
        const std::string& a = seg.argv[j];
        if (!a.empty() && a[0] == '-') {
            if (a == "-o" || a == "-t" || a == "-c") ++j;
            continue;
        }
        if (a.find('=') == std::string::npos) out.add(a);
    }
}

std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i > 0) out += ", ";
        out += names[i];
    }
    return out;
}

struct RunChain {
    std::size_t instruction_index;
    const Instruction* ins;
    ShellCommand cmd;
};

Finding make_finding(const Rule& rule, const Instruction& ins, std::size_t ins_index,
                     std::string message) {
    Finding f;
    f.rule_id = rule.id;
    f.span = ins.span;
    f.message = std::move(message);
    f.category = rule.category;
    f.severity = rule.severity;
    f.fixable = rule.fixable;
    f.instruction_index = ins_index;
    return f;
}

std::optional<FixAction> chain_append_fix(const RunChain& chain, std::string command) {
    if (chain.ins->has_heredoc || chain.cmd.exec_form) return std::nullopt;
    FixAction act;
    act.kind = FixKind::AppendToSegmentChain;
    act.instruction_index = chain.instruction_index;
    act.text = std::move(command);
    return act;
}

std::optional<FixAction> add_flag_fix(const RunChain& chain, int segment_index, std::string flag,
                                      std::string anchor) {
    if (chain.ins->has_heredoc || chain.cmd.exec_form) return std::nullopt;
    FixAction act;
    act.kind = FixKind::AddFlagToCommand;
    act.instruction_index = chain.instruction_index;
    act.segment_index = segment_index;
    act.text = std::move(flag);
    act.anchor = std::move(anchor);
    return act;
}

}  // namespace

std::string_view severity_name(Severity s) {
    switch (s) {
        case Severity::Error: return "error";
        case Severity::Warning: return "warning";
        case Severity::Info: return "info";
    }
    return "";
}

PinMap PinMap::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open pin-map file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

PinMap PinMap::parse(std::string_view text) {
    PinMap map;
    std::size_t pos = 0;
    int line_no = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                                              : nl - pos);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        auto first = line.find_first_not_of(" \t");
        if (first != std::string_view::npos && line[first] != '#') {
            std::istringstream fields{std::string(line)};
            std::string ref, digest_text, extra;
            fields >> ref >> digest_text;
            if (ref.empty() || digest_text.empty() || (fields >> extra && !extra.empty())) {
                throw Error("pin-map line " + std::to_string(line_no) +
                            ": expected 'repository:tag sha256:<hex>'");
            }
            auto slash = ref.rfind('/');
            auto colon = ref.rfind(':');
            if (colon == std::string::npos || (slash != std::string::npos && colon < slash)) {
                throw Error("pin-map line " + std::to_string(line_no) + ": missing tag in '" +
                            ref + "'");
            }
            try {
                map.insert(ref.substr(0, colon), ref.substr(colon + 1),
                           Digest::parse(digest_text));
            } catch (const MalformedDigest& e) {
                throw Error("pin-map line " + std::to_string(line_no) + ": " + e.what());
            }
        }
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    return map;
}

void PinMap::insert(std::string_view repository, std::string_view tag, const Digest& digest) {
    entries_[std::string(repository) + ":" + std::string(tag)] = digest;
}

std::optional<Digest> PinMap::lookup(std::string_view repository, std::string_view tag) const {
    auto it = entries_.find(std::string(repository) + ":" + std::string(tag));
    if (it == entries_.end()) return std::nullopt;
    return it->second;
}

std::vector<Rule> builtin_catalog() {
    using C = RootCauseCategory;
    return {
        {"DR001", C::PackageManagerState, "unpinned-base-image", Severity::Error, true},
        {"DR002", C::PackageManagerState, "unpinned-package-version", Severity::Info, false},
        {"DR003", C::PackageManagerState, "missing-no-install-recommends", Severity::Warning, true},
        {"DR004", C::CachesDatabases, "apt-cache-not-cleaned", Severity::Error, true},
        {"DR005", C::CachesDatabases, "pip-cache-retained", Severity::Error, true},
        {"DR006", C::CachesDatabases, "npm-cache-retained", Severity::Error, true},
        {"DR007", C::TimestampsMetadata, "missing-source-date-epoch", Severity::Warning, true},
        {"DR008", C::RandomNondeterministic, "machine-id-baked", Severity::Warning, true},
        {"DR009", C::ApplicationSpecific, "docs-manpages-retained", Severity::Warning, true},
        {"DR010", C::SystemLogs, "logs-retained", Severity::Warning, true},
        {"DR011", C::CompiledArtifacts, "python-bytecode-nondeterminism", Severity::Warning, true},
        {"DR012", C::CompiledArtifacts, "go-build-untrimmed", Severity::Warning, true},
        {"DR013", C::PackageManagerState, "apt-get-upgrade-used", Severity::Info, false},
    };
}

const Rule* find_rule(const std::vector<Rule>& catalog, std::string_view id) {
    for (const auto& r : catalog) {
        if (r.id == id) return &r;
    }
    return nullptr;
}

LintResult lint(const DockerfileDoc& doc, const std::vector<Rule>& catalog,
                const LintOptions& options) {
    LintResult res;
    auto rule = [&](std::string_view id) { return find_rule(catalog, id); };

    // Segment every RUN once; chains that cannot be tokenized are skipped
    // with a note.
    std::vector<RunChain> chains;
    const auto& instructions = doc.instructions();
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        const Instruction& ins = instructions[i];
        if (ins.kind != InstructionKind::Run) continue;
        try {
            chains.push_back({i, &ins, segment_shell(ins.payload)});
        } catch (const UnterminatedQuote& e) {
            res.notes.push_back("line " + std::to_string(ins.span.start) +
                                ": RUN not evaluated: " + e.what());
        }
    }

    // --- Document-level rules ---

    std::optional<std::size_t> first_from;
    for (std::size_t i = 0; i < instructions.size(); ++i) {
        if (instructions[i].kind == InstructionKind::From) {
            first_from = i;
            break;
        }
    }

    if (const Rule* r = rule("DR001")) {
        for (std::size_t i = 0; i < instructions.size(); ++i) {
            const Instruction& ins = instructions[i];
            if (ins.kind != InstructionKind::From || !ins.from) continue;
            if (ins.from->image.digest) continue;
            Finding f = make_finding(*r, ins, i,
                                     "base image '" + ins.from->image_text +
                                         "' is not pinned to a digest");
            if (options.pin_map != nullptr) {
                const ImageRef& ref = ins.from->image;
                if (auto digest = options.pin_map->lookup(ref.repository, ref.effective_tag())) {
                    FixAction act;
                    act.kind = FixKind::ReplaceImageRef;
                    act.instruction_index = i;
                    ImageRef pinned = ref;
                    pinned.digest = digest->prefixed();
                    act.text = pinned.to_string();
                    f.fix = std::move(act);
                }
            }
            res.findings.push_back(std::move(f));
        }
    }

    if (const Rule* r = rule("DR007")) {
        bool declared = false;
        for (const auto& ins : instructions) {
            if (ins.kind != InstructionKind::Env && ins.kind != InstructionKind::Arg) continue;
            for (const auto& kv : ins.pairs) {
                if (kv.key == "SOURCE_DATE_EPOCH") declared = true;
            }
        }
        if (!declared && !instructions.empty()) {
            std::size_t anchor = first_from.value_or(0);
            const Instruction& ins = instructions[anchor];
            Finding f = make_finding(*r, ins, anchor,
                                     "SOURCE_DATE_EPOCH is never declared; build timestamps will "
                                     "float");
            FixAction act;
            act.kind = FixKind::InsertInstructionsAfter;
            act.instruction_index = anchor;
            act.lines = {"ARG SOURCE_DATE_EPOCH", "ENV SOURCE_DATE_EPOCH=$SOURCE_DATE_EPOCH"};
            f.fix = std::move(act);
            res.findings.push_back(std::move(f));
        }
    }

    if (const Rule* r = rule("DR011")) {
        bool python_base = false;
        for (const auto& ins : instructions) {
            if (ins.kind == InstructionKind::From && ins.from &&
                ins.from->image.repository.find("python") != std::string::npos) {
                python_base = true;
            }
        }
        if (python_base) {
            for (const auto& chain : chains) {
                bool has_pip = false;
                for (const auto& seg : chain.cmd.segments) {
                    if (pip_install_pos(seg)) has_pip = true;
                }
                if (!has_pip || chain_cleans_pycache(chain.cmd)) continue;
                bool env_set = false;
                for (const auto& ins : instructions) {
                    if (ins.span.start >= chain.ins->span.start) break;
                    if (ins.kind != InstructionKind::Env && ins.kind != InstructionKind::Arg)
                        continue;
                    for (const auto& kv : ins.pairs) {
                        if (kv.key == "PYTHONDONTWRITEBYTECODE") env_set = true;
                    }
                }
                if (env_set) continue;
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "pip install on a python base writes .pyc files with "
                                         "embedded timestamps; set PYTHONDONTWRITEBYTECODE=1 or "
                                         "remove __pycache__ directories");
                if (first_from) {
                    FixAction act;
                    act.kind = FixKind::InsertInstructionsAfter;
                    act.instruction_index = *first_from;
                    act.lines = {"ENV PYTHONDONTWRITEBYTECODE=1"};
                    f.fix = std::move(act);
                }
                res.findings.push_back(std::move(f));
                break;  // once per document
            }
        }
    }

    // --- Chain-level rules, at most one finding per rule per RUN ---

    for (const auto& chain : chains) {
        const auto& segs = chain.cmd.segments;

        if (const Rule* r = rule("DR002")) {
            UnpinnedArgs unpinned;
            for (const auto& seg : segs) {
                if (auto p = pip_install_pos(seg)) collect_pip_unpinned(seg, *p, unpinned);
                std::size_t npm_pos = 0;
                if (is_npm_install(seg, &npm_pos)) collect_npm_unpinned(seg, npm_pos, unpinned);
                if (auto p = apt_install_pos(seg)) collect_apt_unpinned(seg, *p, unpinned);
            }
            if (!unpinned.names.empty()) {
                res.findings.push_back(make_finding(
                    *r, *chain.ins, chain.instruction_index,
                    "packages installed without version pins: " + join_names(unpinned.names)));
            }
        }

        if (const Rule* r = rule("DR003")) {
            for (std::size_t si = 0; si < segs.size(); ++si) {
                auto pos = apt_install_pos(segs[si]);
                if (!pos) continue;
                if (has_arg(segs[si], "--no-install-recommends") ||
                    has_arg(segs[si], "APT::Install-Recommends=false")) {
                    continue;
                }
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "apt-get install without --no-install-recommends pulls "
                                         "in floating recommended packages");
                f.fix = add_flag_fix(chain, static_cast<int>(si), "--no-install-recommends",
                                     "install");
                res.findings.push_back(std::move(f));
                break;
            }
        }

        bool has_apt_install = false;
        bool has_sys_install = false;
        for (const auto& seg : segs) {
            if (apt_install_pos(seg)) has_apt_install = true;
            if (is_system_install(seg)) has_sys_install = true;
        }

        if (const Rule* r = rule("DR004")) {
            if (has_apt_install && !chain_removes_prefix(chain.cmd, "/var/lib/apt/lists")) {
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "apt package lists are left in the layer; remove "
                                         "/var/lib/apt/lists/* in the same RUN");
                f.fix = chain_append_fix(chain, "rm -rf /var/lib/apt/lists/*");
                res.findings.push_back(std::move(f));
            }
        }

        if (const Rule* r = rule("DR005")) {
            for (std::size_t si = 0; si < segs.size(); ++si) {
                auto pos = pip_install_pos(segs[si]);
                if (!pos || has_arg(segs[si], "--no-cache-dir")) continue;
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "pip install keeps its cache in the layer; add "
                                         "--no-cache-dir");
                f.fix = add_flag_fix(chain, static_cast<int>(si), "--no-cache-dir", "install");
                res.findings.push_back(std::move(f));
                break;
            }
        }

        if (const Rule* r = rule("DR006")) {
            bool chain_cleaned = false;
            for (const auto& seg : segs) {
                if (is_npm_cache_clean(seg)) chain_cleaned = true;
            }
            if (chain_removes_prefix(chain.cmd, "~/.npm") ||
                chain_removes_prefix(chain.cmd, "/root/.npm")) {
                chain_cleaned = true;
            }
            for (const auto& seg : segs) {
                if (!is_npm_install(seg)) continue;
                bool cleaned = chain_cleaned;
                if (!cleaned) {
                    if (auto dir = npm_cache_dir(seg)) {
                        cleaned = chain_removes_prefix(chain.cmd, *dir);
                    }
                }
                if (cleaned) continue;
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "npm leaves its cache in the layer; run 'npm cache clean "
                                         "--force' or remove the --cache directory");
                f.fix = chain_append_fix(chain, "npm cache clean --force");
                res.findings.push_back(std::move(f));
                break;
            }
        }

        if (const Rule* r = rule("DR008")) {
            if (has_sys_install && !chain_resets_machine_id(chain.cmd)) {
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "package installation can bake a host-specific "
                                         "/etc/machine-id into the image");
                f.fix = chain_append_fix(chain, "truncate -s 0 /etc/machine-id");
                res.findings.push_back(std::move(f));
            }
        }

        if (const Rule* r = rule("DR009")) {
            if (has_apt_install && !chain_removes_prefix(chain.cmd, "/usr/share/man") &&
                !chain_removes_prefix(chain.cmd, "/usr/share/doc")) {
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "installed documentation and man pages stay in the "
                                         "layer; remove /usr/share/man and /usr/share/doc");
                f.fix = chain_append_fix(chain, "rm -rf /usr/share/man /usr/share/doc");
                res.findings.push_back(std::move(f));
            }
        }

        if (const Rule* r = rule("DR010")) {
            if (has_sys_install && !chain_removes_prefix(chain.cmd, "/var/log")) {
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "package-manager logs under /var/log end up in the "
                                         "layer; remove them in the same RUN");
                f.fix = chain_append_fix(chain, "rm -rf /var/log/*");
                res.findings.push_back(std::move(f));
            }
        }

        if (const Rule* r = rule("DR012")) {
            for (std::size_t si = 0; si < segs.size(); ++si) {
                auto pos = go_build_pos(segs[si]);
                if (!pos || has_arg(segs[si], "-trimpath")) continue;
                Finding f = make_finding(*r, *chain.ins, chain.instruction_index,
                                         "go build embeds absolute source paths; add -trimpath");
                f.fix = add_flag_fix(chain, static_cast<int>(si), "-trimpath", "build");
                res.findings.push_back(std::move(f));
                break;
            }
        }

        if (const Rule* r = rule("DR013")) {
            for (const auto& seg : segs) {
                if (!is_apt_upgrade(seg)) continue;
                res.findings.push_back(make_finding(*r, *chain.ins, chain.instruction_index,
                                                    "blanket apt-get upgrade floats every "
                                                    "installed package version"));
                break;
            }
        }
    }

    std::sort(res.findings.begin(), res.findings.end(), [](const Finding& a, const Finding& b) {
        if (a.span.start != b.span.start) return a.span.start < b.span.start;
        return a.rule_id < b.rule_id;
    });
    return res;
}

namespace {

// Applies one FixAction to the document, returning the edited text.
// Returns the unchanged text when the action's target state already holds.
std::string apply_action(const DockerfileDoc& doc, const FixAction& act) {
    const auto& instructions = doc.instructions();
    if (act.instruction_index >= instructions.size()) return doc.original_text();
    const Instruction& ins = instructions[act.instruction_index];

    switch (act.kind) {
        case FixKind::AddFlagToCommand: {
            ShellCommand cmd;
            try {
                cmd = segment_shell(ins.payload);
            } catch (const UnterminatedQuote&) {
                return doc.original_text();
            }
            if (act.segment_index < 0 ||
                static_cast<std::size_t>(act.segment_index) >= cmd.segments.size()) {
                return doc.original_text();
            }
            const SimpleCommand& seg = cmd.segments[static_cast<std::size_t>(act.segment_index)];
            if (std::find(seg.argv.begin(), seg.argv.end(), act.text) != seg.argv.end()) {
                return doc.original_text();
            }
            std::size_t insert_pos = seg.raw_end;
            for (const auto& tok : seg.tokens) {
                if (tok.text == act.anchor) {
                    insert_pos = tok.end;
                    break;
                }
            }
            if (insert_pos == 0 || insert_pos > ins.payload.size()) return doc.original_text();
            auto [line, col] = ins.payload_map[insert_pos - 1];
            return doc.text_with_insertion(static_cast<int>(line), col + 1, " " + act.text);
        }
        case FixKind::AppendToSegmentChain: {
            if (ins.payload.empty()) return doc.original_text();
            ShellCommand existing;
            ShellCommand wanted;
            try {
                existing = segment_shell(ins.payload);
                wanted = segment_shell(act.text);
            } catch (const UnterminatedQuote&) {
                return doc.original_text();
            }
            if (!wanted.segments.empty()) {
                for (const auto& seg : existing.segments) {
                    if (seg.argv == wanted.segments.front().argv) return doc.original_text();
                }
            }
            auto end = ins.payload.find_last_not_of(" \t");
            if (end == std::string::npos) return doc.original_text();
            auto [line, col] = ins.payload_map[end];
            return doc.text_with_insertion(static_cast<int>(line), col + 1, " && " + act.text);
        }
        case FixKind::InsertInstructionsAfter: {
            return doc.text_with_lines_after(ins.span.end - 1, act.lines);
        }
        case FixKind::ReplaceImageRef: {
            if (!ins.from || ins.from->image_end <= ins.from->image_begin) {
                return doc.original_text();
            }
            auto [line, col_begin] = ins.payload_map[ins.from->image_begin];
            auto [line_end, col_last] = ins.payload_map[ins.from->image_end - 1];
            if (line != line_end) return doc.original_text();
            return doc.text_with_replacement(static_cast<int>(line), col_begin, col_last + 1,
                                             act.text);
        }
    }
    return doc.original_text();
}

}  // namespace

FixOutcome apply_fixes(const DockerfileDoc& doc, const std::vector<Finding>& findings) {
    FixOutcome out{doc, {}, 0};
    std::vector<Finding> fixable;
    for (const auto& f : findings) {
        if (f.fix) {
            fixable.push_back(f);
        } else {
            out.unfixed.push_back(f);
        }
    }
    std::sort(fixable.begin(), fixable.end(), [](const Finding& a, const Finding& b) {
        if (a.span.start != b.span.start) return a.span.start < b.span.start;
        return a.rule_id < b.rule_id;
    });

    const auto catalog = builtin_catalog();
    // Instruction-index shifts caused by inserted instructions, in the order
    // they were applied. Maps an original index into the current document.
    std::vector<std::pair<std::size_t, std::size_t>> insertions;
    for (const Finding& orig : fixable) {
        const Rule* r = find_rule(catalog, orig.rule_id);
        if (r == nullptr) {
            out.unfixed.push_back(orig);
            continue;
        }
        std::size_t cur = orig.instruction_index;
        for (auto [pos, cnt] : insertions) {
            if (cur > pos) cur += cnt;
        }
        // Re-anchor against the current document: the rule tells us where it
        // still fires, which also makes repeated application a no-op. A chain
        // may hold several offending segments (the rule reports at most one
        // finding per chain), so keep fixing the same instruction until the
        // rule is satisfied there or a fix stops making progress.
        bool edited_once = false;
        for (int round = 0; round < 16; ++round) {
            LintResult fresh = lint(out.doc, {*r}, {});
            const Finding* target = nullptr;
            for (const auto& f : fresh.findings) {
                if (f.instruction_index == cur) {
                    target = &f;
                    break;
                }
            }
            if (target == nullptr) break;  // satisfied at that location
            FixAction act;
            if (target->fix) {
                act = *target->fix;
            } else {
                act = *orig.fix;
                act.instruction_index = cur;
            }
            std::string edited = apply_action(out.doc, act);
            if (edited == out.doc.original_text()) break;  // no progress
            out.doc = DockerfileDoc::parse(edited);
            edited_once = true;
            if (act.kind == FixKind::InsertInstructionsAfter) {
                insertions.emplace_back(act.instruction_index, act.lines.size());
                break;  // document-level fixes apply once
            }
        }
        if (edited_once) ++out.applied;
    }
    return out;
}

std::string finding_to_json_line(const Finding& f, std::string_view file) {
    nlohmann::json j;
    j["rule_id"] = f.rule_id;
    j["category"] = category_id(f.category);
    j["severity"] = severity_name(f.severity);
    j["file"] = std::string(file);
    j["line_start"] = f.span.start;
    j["line_end"] = f.span.end;
    j["message"] = f.message;
    j["fixable"] = f.fixable;
    return j.dump();
}

}  // namespace reprodock
