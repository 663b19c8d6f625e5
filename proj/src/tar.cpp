/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#include "reprodock/tar.hpp"

#include <cstring>
#include <map>

namespace reprodock {

namespace {

constexpr std::size_t kBlockSize = 512;

struct TarHeaderView {
    const unsigned char* p;

    std::string_view field(std::size_t off, std::size_t len) const {
        const char* s = reinterpret_cast<const char*>(p) + off;
        std::size_t n = 0;
        while (n < len && s[n] != '\0') ++n;
        return {s, n};
    }
};

// Octal with leading spaces/NULs, or GNU base-256 (high bit set in the first
// byte) for large values.
std::uint64_t parse_numeric(const unsigned char* field, std::size_t len) {
    if ((field[0] & 0x80) != 0) {
        std::uint64_t v = field[0] & 0x7f;
        for (std::size_t i = 1; i < len; ++i) {
            v = (v << 8) | field[i];
        }
        return v;
    }
    std::uint64_t v = 0;
    std::size_t i = 0;
    while (i < len && (field[i] == ' ' || field[i] == '\0')) ++i;
    for (; i < len && field[i] >= '0' && field[i] <= '7'; ++i) {
        v = v * 8 + static_cast<std::uint64_t>(field[i] - '0');
    }
    return v;
}

std::int64_t parse_signed_numeric(const unsigned char* field, std::size_t len) {
    if ((field[0] & 0x80) != 0) {
        // Base-256, big-endian two's complement (bit 6 of the first byte is
        // the sign).
        std::int64_t v = field[0] & 0x7f;
        if ((field[0] & 0x40) != 0) v -= 0x80;
        for (std::size_t i = 1; i < len; ++i) {
            v = v * 256 + field[i];
        }
        return v;
    }
    return static_cast<std::int64_t>(parse_numeric(field, len));
}

bool is_zero_block(const unsigned char* block) {
    for (std::size_t i = 0; i < kBlockSize; ++i) {
        if (block[i] != 0) return false;
    }
    return true;
}

bool checksum_ok(const unsigned char* block) {
    std::uint64_t stored = parse_numeric(block + 148, 8);
    std::uint64_t unsigned_sum = 0;
    std::int64_t signed_sum = 0;
    for (std::size_t i = 0; i < kBlockSize; ++i) {
        unsigned char c = (i >= 148 && i < 156) ? ' ' : block[i];
        unsigned_sum += c;
        signed_sum += static_cast<signed char>((i >= 148 && i < 156) ? ' ' : block[i]);
    }
    return stored == unsigned_sum || static_cast<std::int64_t>(stored) == signed_sum;
}

// PAX records: "<len> <key>=<value>\n", len covering the whole record.
std::map<std::string, std::string> parse_pax(const std::string& body, std::uint64_t offset) {
    std::map<std::string, std::string> out;
    std::size_t pos = 0;
    while (pos < body.size()) {
        std::size_t sp = body.find(' ', pos);
        if (sp == std::string::npos) {
            throw CorruptArchive("malformed pax record", offset);
        }
        std::size_t rec_len = 0;
        for (std::size_t i = pos; i < sp; ++i) {
            if (body[i] < '0' || body[i] > '9') {
                throw CorruptArchive("malformed pax record length", offset);
            }
            rec_len = rec_len * 10 + static_cast<std::size_t>(body[i] - '0');
        }
        if (rec_len == 0 || pos + rec_len > body.size() || body[pos + rec_len - 1] != '\n') {
            throw CorruptArchive("pax record overruns header", offset);
        }
        std::string_view record(body.data() + sp + 1, pos + rec_len - 1 - (sp + 1));
        auto eq = record.find('=');
        if (eq == std::string_view::npos) {
            throw CorruptArchive("pax record without '='", offset);
        }
        out[std::string(record.substr(0, eq))] = std::string(record.substr(eq + 1));
        pos += rec_len;
    }
    return out;
}

// "1700000000.123456" -> 1700000000 (sub-second precision truncated).
std::int64_t parse_pax_time(const std::string& v) {
    std::int64_t sign = 1;
    std::size_t i = 0;
    if (!v.empty() && v[0] == '-') {
        sign = -1;
        i = 1;
    }
    std::int64_t secs = 0;
    for (; i < v.size() && v[i] >= '0' && v[i] <= '9'; ++i) {
        secs = secs * 10 + (v[i] - '0');
    }
    return sign * secs;
}

}  // namespace

TarReader::TarReader(ByteSource& src) : src_(src) {}

void TarReader::read_exact(void* buf, std::size_t len, const char* what) {
    auto* out = static_cast<unsigned char*>(buf);
    std::size_t got = 0;
    while (got < len) {
        std::size_t n = src_.read(out + got, len - got);
        if (n == 0) {
            throw CorruptArchive(std::string("truncated archive while reading ") + what,
                                 offset_ + got);
        }
        got += n;
    }
    offset_ += len;
}

bool TarReader::read_block(unsigned char* block) {
    std::size_t got = 0;
    while (got < kBlockSize) {
        std::size_t n = src_.read(block + got, kBlockSize - got);
        if (n == 0) {
            if (got == 0) return false;
            throw CorruptArchive("truncated header block", offset_ + got);
        }
        got += n;
    }
    offset_ += kBlockSize;
    return true;
}

void TarReader::skip_body() {
    unsigned char buf[kBlockSize * 8];
    std::uint64_t left = body_remaining_ + body_padding_;
    while (left > 0) {
        std::size_t want = static_cast<std::size_t>(std::min<std::uint64_t>(left, sizeof buf));
        std::size_t n = src_.read(buf, want);
        if (n == 0) {
            throw CorruptArchive("truncated entry body", offset_);
        }
        offset_ += n;
        left -= n;
    }
    body_remaining_ = 0;
    body_padding_ = 0;
}

std::size_t TarReader::read_body(void* buf, std::size_t max) {
    if (body_remaining_ == 0) return 0;
    std::size_t want = static_cast<std::size_t>(
        std::min<std::uint64_t>(max, body_remaining_));
    std::size_t n = src_.read(buf, want);
    if (n == 0) {
        throw CorruptArchive("truncated entry body", offset_);
    }
    offset_ += n;
    body_remaining_ -= n;
    return n;
}

std::optional<RawTarEntry> TarReader::next() {
    if (done_) return std::nullopt;
    skip_body();

    std::map<std::string, std::string> pax;       // next-file overrides
    std::map<std::string, std::string> pax_global;
    std::optional<std::string> gnu_longname;
    std::optional<std::string> gnu_longlink;

    unsigned char block[kBlockSize];
    while (true) {
        std::uint64_t header_offset = offset_;
        if (!read_block(block)) {
            done_ = true;
            return std::nullopt;
        }
        if (is_zero_block(block)) {
            // End-of-archive marker; a second zero block (or EOF) follows.
            done_ = true;
            return std::nullopt;
        }
        if (!checksum_ok(block)) {
            throw CorruptArchive("bad tar header checksum", header_offset);
        }

        TarHeaderView h{block};
        char typeflag = static_cast<char>(block[156]);
        std::uint64_t size = parse_numeric(block + 124, 12);
        body_remaining_ = size;
        body_padding_ = (kBlockSize - size % kBlockSize) % kBlockSize;

        auto read_meta_body = [&]() {
            std::string body;
            body.resize(static_cast<std::size_t>(size));
            std::size_t got = 0;
            while (got < body.size()) {
                std::size_t n = read_body(body.data() + got, body.size() - got);
                if (n == 0) break;
                got += n;
            }
            skip_body();
            return body;
        };

        if (typeflag == 'x') {
            auto records = parse_pax(read_meta_body(), header_offset);
            for (auto& [k, v] : records) pax[k] = v;
            continue;
        }
        if (typeflag == 'g') {
            auto records = parse_pax(read_meta_body(), header_offset);
            for (auto& [k, v] : records) pax_global[k] = v;
            continue;
        }
        if (typeflag == 'L') {
            std::string body = read_meta_body();
            gnu_longname = std::string(body.c_str());  // NUL-terminated
            continue;
        }
        if (typeflag == 'K') {
            std::string body = read_meta_body();
            gnu_longlink = std::string(body.c_str());
            continue;
        }

        RawTarEntry e;
        e.header_offset = header_offset;
        e.typeflag = typeflag == '\0' ? '0' : typeflag;
        e.size = size;
        e.mode = static_cast<std::uint32_t>(parse_numeric(block + 100, 8));
        e.uid = parse_numeric(block + 108, 8);
        e.gid = parse_numeric(block + 116, 8);
        e.mtime = parse_signed_numeric(block + 136, 12);

        std::string name(h.field(0, 100));
        std::string_view magic = h.field(257, 6);
        if (magic == "ustar") {
            std::string prefix(h.field(345, 155));
            if (!prefix.empty()) name = prefix + "/" + name;
        }
        e.name = std::move(name);
        e.linkname = std::string(h.field(157, 100));

        if (gnu_longname) e.name = *gnu_longname;
        if (gnu_longlink) e.linkname = *gnu_longlink;

        auto pax_value = [&](const char* key) -> const std::string* {
            if (auto it = pax.find(key); it != pax.end()) return &it->second;
            if (auto it = pax_global.find(key); it != pax_global.end()) return &it->second;
            return nullptr;
        };
        if (const auto* v = pax_value("path")) e.name = *v;
        if (const auto* v = pax_value("linkpath")) e.linkname = *v;
        if (const auto* v = pax_value("size")) {
            e.size = std::stoull(*v);
            body_remaining_ = e.size;
            body_padding_ = (kBlockSize - e.size % kBlockSize) % kBlockSize;
        }
        if (const auto* v = pax_value("uid")) e.uid = std::stoull(*v);
        if (const auto* v = pax_value("gid")) e.gid = std::stoull(*v);
        if (const auto* v = pax_value("mtime")) e.mtime = parse_pax_time(*v);

        // Directories and links carry no body regardless of the size field.
        if (e.typeflag == '5' || e.typeflag == '2' || e.typeflag == '1') {
            body_remaining_ = 0;
            body_padding_ = 0;
        }
        return e;
    }
}

}  // namespace reprodock
