/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/dockerfile.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include <nlohmann/json.hpp>

#include "reprodock/digest.hpp"

namespace reprodock {

namespace {

std::string to_upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    return out;
}

bool is_blank(std::string_view line) {
    return line.find_first_not_of(" \t") == std::string_view::npos;
}

bool is_comment_line(std::string_view line) {
    auto first = line.find_first_not_of(" \t");
    return first != std::string_view::npos && line[first] == '#';
}

// A content line continues onto the next one when its last non-whitespace
// character is a backslash.
bool ends_with_continuation(std::string_view line) {
    auto last = line.find_last_not_of(" \t\r");
    return last != std::string_view::npos && line[last] == '\\';
}

const std::map<std::string, InstructionKind, std::less<>>& keyword_table() {
    static const std::map<std::string, InstructionKind, std::less<>> table = {
        {"FROM", InstructionKind::From},
        {"RUN", InstructionKind::Run},
        {"COPY", InstructionKind::Copy},
        {"ADD", InstructionKind::Add},
        {"ENV", InstructionKind::Env},
        {"ARG", InstructionKind::Arg},
        {"WORKDIR", InstructionKind::Workdir},
        {"CMD", InstructionKind::Cmd},
        {"ENTRYPOINT", InstructionKind::Entrypoint},
        {"EXPOSE", InstructionKind::Expose},
        {"LABEL", InstructionKind::Label},
        {"USER", InstructionKind::User},
        {"VOLUME", InstructionKind::Volume},
        {"SHELL", InstructionKind::Shell},
        {"HEALTHCHECK", InstructionKind::Healthcheck},
        {"STOPSIGNAL", InstructionKind::Stopsignal},
        {"ONBUILD", InstructionKind::Onbuild},
        {"MAINTAINER", InstructionKind::Maintainer},
    };
    return table;
}

// Whitespace-token splitter with shell quoting rules but no command
// separators. Used for FROM / ENV / ARG / LABEL payloads.
std::vector<ShellToken> tokenize_words(std::string_view text) {
    std::vector<ShellToken> out;
    std::size_t i = 0;
    const std::size_t n = text.size();
    bool in_token = false;
    ShellToken tok;
    char quote = 0;
    std::size_t quote_open = 0;
    auto start = [&](std::size_t pos) {
        if (!in_token) {
            in_token = true;
            tok = {};
            tok.begin = pos;
        }
    };
    auto flush = [&](std::size_t endpos) {
        if (in_token) {
            tok.end = endpos;
            out.push_back(tok);
            in_token = false;
        }
    };
    while (i < n) {
        char c = text[i];
        if (quote == '\'') {
            if (c == '\'') {
                quote = 0;
            } else {
                tok.text += c;
            }
            ++i;
        } else if (quote == '"') {
            if (c == '"') {
                quote = 0;
                ++i;
            } else if (c == '\\' && i + 1 < n &&
                       (text[i + 1] == '"' || text[i + 1] == '\\' || text[i + 1] == '$' ||
                        text[i + 1] == '`')) {
                tok.text += text[i + 1];
                i += 2;
            } else {
                tok.text += c;
                ++i;
            }
        } else if (c == '\\' && i + 1 < n) {
            start(i);
            tok.text += text[i + 1];
            i += 2;
        } else if (c == '\'' || c == '"') {
            start(i);
            quote = c;
            quote_open = i;
            ++i;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            flush(i);
            ++i;
        } else {
            start(i);
            tok.text += c;
            ++i;
        }
    }
    if (quote != 0) {
        throw UnterminatedQuote("unterminated quote at column " + std::to_string(quote_open + 1),
                                static_cast<int>(quote_open + 1));
    }
    flush(n);
    return out;
}

struct HeredocMarker {
    std::string delimiter;
    bool strip_tabs = false;
};

// Finds heredoc attachments (<<WORD, <<-WORD, quoted delimiters) at quote
// depth zero in a folded payload.
std::vector<HeredocMarker> scan_heredocs(std::string_view payload) {
    std::vector<HeredocMarker> out;
    std::size_t i = 0;
    const std::size_t n = payload.size();
    char quote = 0;
    while (i < n) {
        char c = payload[i];
        if (quote != 0) {
            if (c == quote) quote = 0;
            ++i;
            continue;
        }
        if (c == '\'' || c == '"') {
            quote = c;
            ++i;
            continue;
        }
        if (c == '\\') {
            i += 2;
            continue;
        }
        if (c == '<' && i + 1 < n && payload[i + 1] == '<') {
            std::size_t j = i + 2;
            if (j < n && payload[j] == '<') {  // here-string, not a heredoc
                i = j + 1;
                continue;
            }
            HeredocMarker m;
            if (j < n && payload[j] == '-') {
                m.strip_tabs = true;
                ++j;
            }
            char dq = 0;
            if (j < n && (payload[j] == '\'' || payload[j] == '"')) {
                dq = payload[j];
                ++j;
            }
            std::size_t word_begin = j;
            while (j < n && (std::isalnum(static_cast<unsigned char>(payload[j])) || payload[j] == '_')) {
                ++j;
            }
            if (j > word_begin && (dq == 0 || (j < n && payload[j] == dq))) {
                m.delimiter = std::string(payload.substr(word_begin, j - word_begin));
                out.push_back(std::move(m));
            }
            i = j;
            continue;
        }
        ++i;
    }
    return out;
}

void parse_from_payload(Instruction& ins, std::vector<std::string>& warnings) {
    std::vector<ShellToken> tokens;
    try {
        tokens = tokenize_words(ins.payload);
    } catch (const UnterminatedQuote&) {
        warnings.push_back("line " + std::to_string(ins.span.start) +
                           ": unparseable FROM arguments");
        return;
    }
    FromPayload from;
    std::size_t i = 0;
    for (; i < tokens.size(); ++i) {
        const auto& t = tokens[i];
        if (t.text.rfind("--", 0) == 0) {
            if (t.text.rfind("--platform=", 0) == 0) {
                from.platform = t.text.substr(std::string_view("--platform=").size());
            }
            continue;
        }
        from.image_text = t.text;
        from.image_begin = t.begin;
        from.image_end = t.end;
        ++i;
        break;
    }
    if (from.image_text.empty()) {
        warnings.push_back("line " + std::to_string(ins.span.start) + ": FROM without an image");
        return;
    }
    if (i < tokens.size() && to_upper(tokens[i].text) == "AS" && i + 1 < tokens.size()) {
        from.stage_alias = tokens[i + 1].text;
    }
    try {
        from.image = parse_image_ref(from.image_text);
    } catch (const Error& e) {
        warnings.push_back("line " + std::to_string(ins.span.start) +
                           ": malformed image reference: " + e.what());
        return;
    }
    ins.from = std::move(from);
}

void parse_pairs_payload(Instruction& ins, std::vector<std::string>& warnings) {
    std::vector<ShellToken> tokens;
    try {
        tokens = tokenize_words(ins.payload);
    } catch (const UnterminatedQuote&) {
        warnings.push_back("line " + std::to_string(ins.span.start) + ": unparseable " +
                           std::string(instruction_kind_name(ins.kind)) + " arguments");
        return;
    }
    if (tokens.empty()) return;
    if (ins.kind == InstructionKind::Arg) {
        // ARG NAME[=default]
        auto eq = tokens[0].text.find('=');
        KeyValue kv;
        if (eq == std::string::npos) {
            kv.key = tokens[0].text;
        } else {
            kv.key = tokens[0].text.substr(0, eq);
            kv.value = tokens[0].text.substr(eq + 1);
            kv.has_value = true;
        }
        ins.pairs.push_back(std::move(kv));
        return;
    }
    // ENV / LABEL: K=V pairs, or the legacy "ENV KEY rest of line" form.
    if (tokens[0].text.find('=') != std::string::npos) {
        for (const auto& t : tokens) {
            auto eq = t.text.find('=');
            KeyValue kv;
            if (eq == std::string::npos) {
                kv.key = t.text;
            } else {
                kv.key = t.text.substr(0, eq);
                kv.value = t.text.substr(eq + 1);
                kv.has_value = true;
            }
            ins.pairs.push_back(std::move(kv));
        }
    } else {
        KeyValue kv;
        kv.key = tokens[0].text;
        if (tokens.size() > 1) {
            kv.value = std::string(ins.payload.substr(tokens[1].begin));
            kv.has_value = true;
        }
        ins.pairs.push_back(std::move(kv));
    }
}

}  // namespace

std::string_view instruction_kind_name(InstructionKind kind) {
    switch (kind) {
        case InstructionKind::From: return "FROM";
        case InstructionKind::Run: return "RUN";
        case InstructionKind::Copy: return "COPY";
        case InstructionKind::Add: return "ADD";
        case InstructionKind::Env: return "ENV";
        case InstructionKind::Arg: return "ARG";
        case InstructionKind::Workdir: return "WORKDIR";
        case InstructionKind::Cmd: return "CMD";
        case InstructionKind::Entrypoint: return "ENTRYPOINT";
        case InstructionKind::Expose: return "EXPOSE";
        case InstructionKind::Label: return "LABEL";
        case InstructionKind::User: return "USER";
        case InstructionKind::Volume: return "VOLUME";
        case InstructionKind::Shell: return "SHELL";
        case InstructionKind::Healthcheck: return "HEALTHCHECK";
        case InstructionKind::Stopsignal: return "STOPSIGNAL";
        case InstructionKind::Onbuild: return "ONBUILD";
        case InstructionKind::Maintainer: return "MAINTAINER";
        case InstructionKind::Comment: return "COMMENT";
        case InstructionKind::Unknown: return "UNKNOWN";
    }
    return "UNKNOWN";
}

std::string ImageRef::to_string() const {
    std::string out = repository;
    if (tag) {
        out += ':';
        out += *tag;
    }
    if (digest) {
        out += '@';
        out += *digest;
    }
    return out;
}

ImageRef parse_image_ref(std::string_view ref) {
    if (ref.empty()) {
        throw Error("empty image reference");
    }
    if (ref.find_first_of(" \t\r\n") != std::string_view::npos) {
        throw Error("image reference contains whitespace: " + std::string(ref));
    }
    ImageRef out;
    std::string_view repo_tag = ref;
    auto at = ref.find('@');
    if (at != std::string_view::npos) {
        out.digest = Digest::parse(ref.substr(at + 1)).prefixed();
        repo_tag = ref.substr(0, at);
    }
    auto slash = repo_tag.rfind('/');
    auto colon = repo_tag.rfind(':');
    if (colon != std::string_view::npos &&
        (slash == std::string_view::npos || colon > slash)) {
        auto tag = repo_tag.substr(colon + 1);
        if (!tag.empty()) out.tag = std::string(tag);
        out.repository = std::string(repo_tag.substr(0, colon));
    } else {
        out.repository = std::string(repo_tag);
    }
    if (out.repository.empty()) {
        throw Error("image reference has no repository: " + std::string(ref));
    }
    return out;
}

DockerfileDoc DockerfileDoc::parse(std::string_view text) {
    DockerfileDoc doc;
    doc.original_.assign(text);

    // Split into lines, preserving each line's terminator.
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            doc.lines_.emplace_back(text.substr(pos));
            doc.eols_.emplace_back("");
            break;
        }
        std::size_t content_end = nl;
        std::string eol = "\n";
        if (content_end > pos && text[content_end - 1] == '\r') {
            --content_end;
            eol = "\r\n";
        }
        doc.lines_.emplace_back(text.substr(pos, content_end - pos));
        doc.eols_.push_back(eol);
        pos = nl + 1;
    }

    const int n = static_cast<int>(doc.lines_.size());
    int i = 0;
    while (i < n) {
        const std::string& line = doc.lines_[static_cast<std::size_t>(i)];
        if (is_blank(line)) {
            ++i;
            continue;
        }
        if (is_comment_line(line)) {
            Instruction ins;
            ins.kind = InstructionKind::Comment;
            ins.raw_text = line;
            ins.payload = line;
            ins.span = {i + 1, i + 1};
            doc.instructions_.push_back(std::move(ins));
            ++i;
            continue;
        }

        // Instruction start: gather the continued physical lines.
        const int first_line = i;
        std::vector<int> content_lines;  // lines contributing to the payload
        content_lines.push_back(i);
        bool cont = ends_with_continuation(line);
        ++i;
        while (cont) {
            if (i >= n) {
                throw DanglingContinuation("file ends mid-continuation after line " +
                                           std::to_string(n));
            }
            const std::string& l2 = doc.lines_[static_cast<std::size_t>(i)];
            if (is_blank(l2) || is_comment_line(l2)) {
                // Blank and comment lines inside a continuation are skipped
                // from the payload but stay part of the instruction.
                ++i;
                continue;
            }
            content_lines.push_back(i);
            cont = ends_with_continuation(l2);
            ++i;
        }
        int last_line = i - 1;

        Instruction ins;

        // Keyword from the first line.
        const std::string& l0 = doc.lines_[static_cast<std::size_t>(first_line)];
        std::size_t kw_begin = l0.find_first_not_of(" \t");
        std::size_t kw_end = kw_begin;
        while (kw_end < l0.size() && l0[kw_end] != ' ' && l0[kw_end] != '\t') ++kw_end;
        ins.keyword = l0.substr(kw_begin, kw_end - kw_begin);
        auto it = keyword_table().find(to_upper(ins.keyword));
        if (it != keyword_table().end()) {
            ins.kind = it->second;
        } else {
            ins.kind = InstructionKind::Unknown;
            doc.warnings_.push_back("line " + std::to_string(first_line + 1) +
                                    ": unknown instruction '" + ins.keyword + "'");
        }

        // Fold the payload, recording where every character came from.
        for (std::size_t ci = 0; ci < content_lines.size(); ++ci) {
            int li = content_lines[ci];
            const std::string& l = doc.lines_[static_cast<std::size_t>(li)];
            std::size_t begin = 0;
            if (ci == 0) {
                begin = l.find_first_not_of(" \t", kw_end);
                if (begin == std::string::npos) begin = l.size();
            }
            std::size_t end = l.size();
            if (ci + 1 < content_lines.size()) {
                // Drop the trailing backslash and any whitespace after it.
                end = l.find_last_not_of(" \t\r");
            }
            for (std::size_t col = begin; col < end; ++col) {
                ins.payload.push_back(l[col]);
                ins.payload_map.emplace_back(static_cast<std::uint32_t>(li),
                                             static_cast<std::uint32_t>(col));
            }
        }
        // End sentinel: one past the last payload byte on its line.
        if (!ins.payload_map.empty()) {
            auto [ll, lc] = ins.payload_map.back();
            ins.payload_map.emplace_back(ll, lc + 1);
        } else {
            ins.payload_map.emplace_back(static_cast<std::uint32_t>(first_line),
                                         static_cast<std::uint32_t>(kw_end));
        }

        // Heredocs extend the instruction through their terminator lines.
        if (ins.kind == InstructionKind::Run || ins.kind == InstructionKind::Copy ||
            ins.kind == InstructionKind::Add) {
            for (const auto& marker : scan_heredocs(ins.payload)) {
                ins.has_heredoc = true;
                bool closed = false;
                while (i < n) {
                    std::string body = doc.lines_[static_cast<std::size_t>(i)];
                    if (marker.strip_tabs) {
                        body.erase(0, body.find_first_not_of('\t'));
                    }
                    ++i;
                    if (body == marker.delimiter) {
                        closed = true;
                        break;
                    }
                }
                if (!closed) {
                    throw DanglingContinuation("unterminated heredoc '" + marker.delimiter +
                                               "' starting at line " +
                                               std::to_string(first_line + 1));
                }
                last_line = i - 1;
            }
        }

        ins.span = {first_line + 1, last_line + 1};
        for (int li = first_line; li <= last_line; ++li) {
            ins.raw_text += doc.lines_[static_cast<std::size_t>(li)];
            if (li < last_line) ins.raw_text += doc.eols_[static_cast<std::size_t>(li)];
        }

        switch (ins.kind) {
            case InstructionKind::From:
                parse_from_payload(ins, doc.warnings_);
                break;
            case InstructionKind::Env:
            case InstructionKind::Arg:
            case InstructionKind::Label:
                parse_pairs_payload(ins, doc.warnings_);
                break;
            case InstructionKind::Run:
            case InstructionKind::Cmd:
            case InstructionKind::Entrypoint:
            case InstructionKind::Shell: {
                std::string_view p = ins.payload;
                auto fb = p.find_first_not_of(" \t");
                if (fb != std::string_view::npos && p[fb] == '[') {
                    ins.exec_form = nlohmann::json::accept(p);
                }
                break;
            }
            default:
                break;
        }

        doc.instructions_.push_back(std::move(ins));
    }

    if (doc.instructions_.empty()) {
        throw EmptyFile("no instructions in Dockerfile (line 1)");
    }
    return doc;
}

std::vector<std::string> DockerfileDoc::trailing_comments() const {
    std::vector<std::string> out;
    for (auto it = instructions_.rbegin(); it != instructions_.rend(); ++it) {
        if (it->is_comment()) {
            out.push_back(it->raw_text);
        } else {
            break;
        }
    }
    std::reverse(out.begin(), out.end());
    return out;
}

std::string DockerfileDoc::render() const {
    std::string out;
    out.reserve(original_.size());
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        out += lines_[i];
        out += eols_[i];
    }
    return out;
}

std::string DockerfileDoc::dominant_eol() const {
    for (const auto& e : eols_) {
        if (!e.empty()) return e;
    }
    return "\n";
}

std::string DockerfileDoc::text_with_insertion(int line_index0, std::size_t column,
                                               std::string_view text) const {
    std::string out;
    out.reserve(original_.size() + text.size());
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        if (static_cast<int>(i) == line_index0) {
            std::string edited = lines_[i];
            edited.insert(std::min(column, edited.size()), std::string(text));
            out += edited;
        } else {
            out += lines_[i];
        }
        out += eols_[i];
    }
    return out;
}

std::string DockerfileDoc::text_with_replacement(int line_index0, std::size_t col_begin,
                                                 std::size_t col_end,
                                                 std::string_view text) const {
    std::string out;
    out.reserve(original_.size() + text.size());
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        if (static_cast<int>(i) == line_index0) {
            std::string edited = lines_[i];
            col_begin = std::min(col_begin, edited.size());
            col_end = std::min(col_end, edited.size());
            edited.replace(col_begin, col_end - col_begin, std::string(text));
            out += edited;
        } else {
            out += lines_[i];
        }
        out += eols_[i];
    }
    return out;
}

std::string DockerfileDoc::text_with_lines_after(int line_index0,
                                                 const std::vector<std::string>& new_lines) const {
    const std::string eol = dominant_eol();
    std::string out;
    out.reserve(original_.size() + new_lines.size() * 32);
    for (std::size_t i = 0; i < lines_.size(); ++i) {
        out += lines_[i];
        if (static_cast<int>(i) == line_index0) {
            // Keep the anchor line's own terminator, then the new lines.
            std::string anchor_eol = eols_[i].empty() ? eol : eols_[i];
            out += anchor_eol;
            for (const auto& nl : new_lines) {
                out += nl;
                out += anchor_eol;
            }
            // The anchor's terminator was consumed above.
            continue;
        }
        out += eols_[i];
    }
    return out;
}

DockerfileDoc parse_dockerfile(std::string_view text) {
    return DockerfileDoc::parse(text);
}

std::string render_dockerfile(const DockerfileDoc& doc) {
    return doc.render();
}

std::string_view connector_text(Connector c) {
    switch (c) {
        case Connector::And: return "&&";
        case Connector::Or: return "||";
        case Connector::Seq: return ";";
        case Connector::None: return "";
    }
    return "";
}

std::string ShellCommand::rejoin() const {
    std::string out;
    for (const auto& seg : segments) {
        out += seg.raw;
        out += seg.connector_raw;
    }
    return out;
}

ShellCommand segment_shell(std::string_view payload) {
    ShellCommand out;

    // Exec form passes through as a single opaque segment.
    auto fb = payload.find_first_not_of(" \t\r\n");
    if (fb != std::string_view::npos && payload[fb] == '[' &&
        nlohmann::json::accept(payload)) {
        auto arr = nlohmann::json::parse(payload);
        if (arr.is_array()) {
            SimpleCommand seg;
            seg.raw = std::string(payload);
            seg.raw_begin = 0;
            seg.raw_end = payload.size();
            for (const auto& el : arr) {
                if (el.is_string()) {
                    seg.argv.push_back(el.get<std::string>());
                    seg.tokens.push_back({seg.argv.back(), 0, 0});
                }
            }
            out.exec_form = true;
            out.segments.push_back(std::move(seg));
            return out;
        }
    }

    if (payload.empty()) return out;

    const std::size_t n = payload.size();
    std::size_t i = 0;
    std::size_t seg_begin = 0;
    SimpleCommand cur;
    bool in_token = false;
    ShellToken tok;
    char quote = 0;
    std::size_t quote_open = 0;

    auto start_token = [&](std::size_t p) {
        if (!in_token) {
            in_token = true;
            tok = {};
            tok.begin = p;
        }
    };
    auto flush_token = [&](std::size_t endpos) {
        if (in_token) {
            tok.end = endpos;
            cur.argv.push_back(tok.text);
            cur.tokens.push_back(tok);
            in_token = false;
        }
    };
    auto finish_segment = [&](std::size_t endpos, Connector c, std::string_view ctext,
                              std::size_t next_begin) {
        flush_token(endpos);
        cur.raw = std::string(payload.substr(seg_begin, endpos - seg_begin));
        cur.raw_begin = seg_begin;
        cur.raw_end = endpos;
        cur.connector_after = c;
        cur.connector_raw = std::string(ctext);
        out.segments.push_back(std::move(cur));
        cur = {};
        seg_begin = next_begin;
    };

    while (i < n) {
        char c = payload[i];
        if (quote == '\'') {
            if (c == '\'') {
                quote = 0;
            } else {
                tok.text += c;
            }
            ++i;
        } else if (quote == '"') {
            if (c == '"') {
                quote = 0;
                ++i;
            } else if (c == '\\' && i + 1 < n &&
                       (payload[i + 1] == '"' || payload[i + 1] == '\\' ||
                        payload[i + 1] == '$' || payload[i + 1] == '`')) {
                tok.text += payload[i + 1];
                i += 2;
            } else {
                tok.text += c;
                ++i;
            }
        } else if (c == '\\' && i + 1 < n) {
            start_token(i);
            tok.text += payload[i + 1];
            i += 2;
        } else if (c == '\'' || c == '"') {
            start_token(i);
            quote = c;
            quote_open = i;
            ++i;
        } else if (c == '&' && i + 1 < n && payload[i + 1] == '&') {
            finish_segment(i, Connector::And, "&&", i + 2);
            i += 2;
        } else if (c == '|' && i + 1 < n && payload[i + 1] == '|') {
            finish_segment(i, Connector::Or, "||", i + 2);
            i += 2;
        } else if (c == ';') {
            finish_segment(i, Connector::Seq, ";", i + 1);
            ++i;
        } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v') {
            flush_token(i);
            ++i;
        } else {
            start_token(i);
            tok.text += c;
            ++i;
        }
    }
    if (quote != 0) {
        throw UnterminatedQuote("unterminated quote at column " + std::to_string(quote_open + 1),
                                static_cast<int>(quote_open + 1));
    }
    finish_segment(n, Connector::None, "", n);
    return out;
}

}  // namespace reprodock
