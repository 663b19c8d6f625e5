/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "reprodock/errors.hpp"

namespace reprodock {

class DanglingContinuation : public Error {
public:
    using Error::Error;
};

class EmptyFile : public Error {
public:
    using Error::Error;
};

class UnterminatedQuote : public Error {
public:
    UnterminatedQuote(const std::string& msg, int column) : Error(msg), column(column) {}
    int column;  // 1-based column of the opening quote
};

enum class InstructionKind {
    From,
    Run,
    Copy,
    Add,
    Env,
    Arg,
    Workdir,
    Cmd,
    Entrypoint,
    Expose,
    Label,
    User,
    Volume,
    Shell,
    Healthcheck,
    Stopsignal,
    Onbuild,
    Maintainer,
    Comment,
    Unknown,
};

std::string_view instruction_kind_name(InstructionKind kind);

// Reference to a container image: [registry/]repository[:tag][@sha256:<hex>].
struct ImageRef {
    std::string repository;
    std::optional<std::string> tag;
    std::optional<std::string> digest;  // "sha256:<64 hex>"

    // Tag defaulting: an untagged, undigested reference means "latest".
    std::string effective_tag() const { return tag.value_or("latest"); }

    std::string to_string() const;
};

// Decomposes an image reference string. A colon that is part of a registry
// port (before the last '/') is not treated as a tag separator.
// Throws MalformedDigest when a digest marker is present but the digest is
// not "sha256:" + 64 hex characters.
ImageRef parse_image_ref(std::string_view ref);

// 1-based inclusive line span.
struct LineSpan {
    int start = 0;
    int end = 0;
    friend bool operator==(const LineSpan&, const LineSpan&) = default;
};

struct KeyValue {
    std::string key;
    std::string value;
    bool has_value = false;
};

struct FromPayload {
    ImageRef image;
    std::string image_text;  // image token exactly as written
    std::optional<std::string> stage_alias;
    std::optional<std::string> platform;
    // Offsets of the image token within the folded payload.
    std::size_t image_begin = 0;
    std::size_t image_end = 0;
};

struct Instruction {
    InstructionKind kind = InstructionKind::Unknown;
    std::string keyword;   // as written; empty for comments
    std::string raw_text;  // exact source bytes, internal line breaks included
    LineSpan span;

    // Payload with line continuations folded away. Full-line comments inside
    // a continued instruction do not appear here. Heredoc bodies are kept in
    // raw_text only.
    std::string payload;

    // Maps each payload character (plus one end sentinel) to its
    // (0-based line index, byte column) in the source document.
    std::vector<std::pair<std::uint32_t, std::uint32_t>> payload_map;

    std::optional<FromPayload> from;  // kind == From
    std::vector<KeyValue> pairs;      // Env / Arg / Label
    bool exec_form = false;           // Run/Cmd/Entrypoint JSON-array form
    bool has_heredoc = false;

    bool is_comment() const { return kind == InstructionKind::Comment; }
};

// Parsed Dockerfile. Immutable after construction; render() reproduces the
// original bytes exactly for unmodified documents.
class DockerfileDoc {
public:
    // Throws DanglingContinuation / EmptyFile; keywords it does not know
    // become Unknown instructions plus a warning, never an error.
    static DockerfileDoc parse(std::string_view text);

    const std::vector<Instruction>& instructions() const { return instructions_; }
    const std::string& original_text() const { return original_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    // Raw lines of comments after the last non-comment instruction.
    std::vector<std::string> trailing_comments() const;

    std::string render() const;

    int line_count() const { return static_cast<int>(lines_.size()); }
    const std::string& line(int index0) const { return lines_[static_cast<std::size_t>(index0)]; }

    // Line terminator used when synthesizing new lines ("\n" or "\r\n"),
    // taken from the document's first terminated line.
    std::string dominant_eol() const;

    // Editing primitives; each returns the full edited text, which the caller
    // re-parses. Untouched lines are preserved byte-exactly.
    std::string text_with_insertion(int line_index0, std::size_t column, std::string_view text) const;
    std::string text_with_replacement(int line_index0, std::size_t col_begin, std::size_t col_end,
                                      std::string_view text) const;
    std::string text_with_lines_after(int line_index0, const std::vector<std::string>& new_lines) const;

private:
    std::string original_;
    std::vector<std::string> lines_;  // without terminators
    std::vector<std::string> eols_;   // terminator per line ("" for an unterminated last line)
    std::vector<Instruction> instructions_;
    std::vector<std::string> warnings_;
};

DockerfileDoc parse_dockerfile(std::string_view text);
std::string render_dockerfile(const DockerfileDoc& doc);

enum class Connector { And, Or, Seq, None };

std::string_view connector_text(Connector c);

struct ShellToken {
    std::string text;        // quotes stripped, escapes resolved
    std::size_t begin = 0;   // [begin, end) in the payload
    std::size_t end = 0;
};

struct SimpleCommand {
    std::vector<std::string> argv;
    std::vector<ShellToken> tokens;  // aligned with argv
    std::string raw;                 // exact payload slice, surrounding whitespace included
    std::size_t raw_begin = 0;
    std::size_t raw_end = 0;
    Connector connector_after = Connector::None;
    std::string connector_raw;  // "&&", "||" or ";"
};

struct ShellCommand {
    std::vector<SimpleCommand> segments;
    bool exec_form = false;

    // Concatenating raw segments and connectors reproduces the payload
    // byte-exactly.
    std::string rejoin() const;
};

// Splits a shell-form RUN payload on &&, || and ; at quote depth zero.
// Exec-form (JSON array) payloads pass through as one opaque segment.
// Throws UnterminatedQuote with the opening column.
ShellCommand segment_shell(std::string_view payload);

}  // namespace reprodock
