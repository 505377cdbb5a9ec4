#pragma once

// Framing for key messages exchanged between ranks:
//
//   offset 0   u32 LE  kind (1 = KEYS, 2 = DONE)
//   offset 4   u64 LE  key count n
//   offset 12  n x u64 LE keys
//
// Total length is 12 + 8n bytes.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "psort/core_sorts.hpp"
#include "psort/errors.hpp"

namespace psort {

enum class MessageKind : std::uint32_t { keys = 1, done = 2 };

struct Message {
    MessageKind kind = MessageKind::keys;
    std::vector<Key> payload;

    friend bool operator==(const Message&, const Message&) = default;
};

inline constexpr std::size_t kHeaderBytes = 12;

namespace wire {

inline void put_u32(std::byte* p, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) p[i] = std::byte((v >> (8 * i)) & 0xff);
}

inline void put_u64(std::byte* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = std::byte((v >> (8 * i)) & 0xff);
}

inline std::uint32_t get_u32(const std::byte* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
    return v;
}

inline std::uint64_t get_u64(const std::byte* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
    return v;
}

inline bool known_kind(std::uint32_t kind) {
    return kind == std::uint32_t(MessageKind::keys) ||
           kind == std::uint32_t(MessageKind::done);
}

//! Parses a header; returns the payload key count. Throws on an unknown kind
//! or a count whose byte length would not fit in memory.
inline std::uint64_t parse_header(std::span<const std::byte> header,
                                  MessageKind& kind) {
    if (header.size() < kHeaderBytes)
        throw TruncatedMessage("message shorter than the 12-byte header (" +
                               std::to_string(header.size()) + " bytes)");
    const std::uint32_t raw_kind = get_u32(header.data());
    if (!known_kind(raw_kind)) throw UnknownKind(raw_kind);
    kind = MessageKind(raw_kind);
    return get_u64(header.data() + 4);
}

} // namespace wire

inline std::vector<std::byte> encode_message(const Message& msg) {
    std::vector<std::byte> out(kHeaderBytes + 8 * msg.payload.size());
    wire::put_u32(out.data(), std::uint32_t(msg.kind));
    wire::put_u64(out.data() + 4, msg.payload.size());
    std::byte* p = out.data() + kHeaderBytes;
    for (Key k : msg.payload) {
        wire::put_u64(p, k);
        p += 8;
    }
    return out;
}

inline Message decode_message(std::span<const std::byte> bytes) {
    Message msg;
    const std::uint64_t count = wire::parse_header(bytes, msg.kind);
    const std::size_t available = (bytes.size() - kHeaderBytes) / 8;
    if (count > available)
        throw TruncatedMessage("header announces " + std::to_string(count) +
                               " keys but only " + std::to_string(available) +
                               " are present");
    msg.payload.resize(count);
    const std::byte* p = bytes.data() + kHeaderBytes;
    for (auto& k : msg.payload) {
        k = wire::get_u64(p);
        p += 8;
    }
    return msg;
}

} // namespace psort
