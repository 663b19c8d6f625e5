/*
 * Copyright (C) 2026 The reprodock Authors.
 *
 * SPDX-License-Identifier: Apache-2.0
 */

#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "reprodock/errors.hpp"
#include "reprodock/io.hpp"

namespace reprodock {

class CorruptArchive : public Error {
public:
    CorruptArchive(const std::string& msg, std::uint64_t offset)
        : Error(msg + " (byte offset " + std::to_string(offset) + ")"), offset(offset) {}
    std::uint64_t offset;
};

struct RawTarEntry {
    std::string name;       // as stored (pax/gnu long names resolved)
    char typeflag = '0';
    std::uint64_t size = 0;
    std::uint32_t mode = 0;
    std::uint64_t uid = 0;
    std::uint64_t gid = 0;
    std::int64_t mtime = 0;  // whole seconds; pax sub-second precision truncated
    std::string linkname;
    std::uint64_t header_offset = 0;
};

// Streaming ustar/PAX/GNU tar reader. Handles PAX extended headers (long
// paths, large sizes, sub-second mtimes) and GNU longname/longlink entries.
// Peak memory is independent of archive and entry size as long as callers
// stream entry bodies through read_body().
class TarReader {
public:
    explicit TarReader(ByteSource& src);

    // Advances to the next entry, skipping any unread body bytes of the
    // previous one. Returns nullopt at the end-of-archive marker or EOF.
    // Throws CorruptArchive (with byte offset) on malformed input.
    std::optional<RawTarEntry> next();

    // Reads from the current entry's body; returns 0 when exhausted.
    std::size_t read_body(void* buf, std::size_t max);

private:
    void read_exact(void* buf, std::size_t len, const char* what);
    bool read_block(unsigned char* block);  // false on clean EOF
    void skip_body();

    ByteSource& src_;
    std::uint64_t offset_ = 0;
    std::uint64_t body_remaining_ = 0;
    std::uint64_t body_padding_ = 0;
    bool done_ = false;
};

}  // namespace reprodock
