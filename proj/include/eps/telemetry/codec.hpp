#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/crc.hpp>

#include "eps/core/error.hpp"

namespace eps::telemetry {

/// Base of all packet decoding failures.
class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};
/// Bad magic, truncated buffer, or declared length inconsistent with the buffer.
class FramingError : public DecodeError {
public:
    using DecodeError::DecodeError;
};
/// CRC mismatch.
class IntegrityError : public DecodeError {
public:
    using DecodeError::DecodeError;
};
/// Well-framed packet of an unsupported protocol version.
class VersionError : public DecodeError {
public:
    using DecodeError::DecodeError;
};

inline constexpr std::uint8_t kMagic0 = 0xE5;
inline constexpr std::uint8_t kMagic1 = 0x05;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kHeaderBytes = 12;
inline constexpr std::size_t kCrcBytes = 2;
inline constexpr std::uint8_t kDefaultChannels = 2;
inline constexpr std::uint8_t kDefaultSamplesPerChannel = 100;
inline constexpr double kVoltsPerLsb = 100e-6;
inline constexpr std::uint8_t kFlagSaturated = 0x01;

constexpr std::size_t packet_length(std::size_t channels, std::size_t samples_per_channel) {
    return kHeaderBytes + 2 * channels * samples_per_channel + kCrcBytes;
}
static_assert(packet_length(kDefaultChannels, kDefaultSamplesPerChannel) == 414);

/// CRC-16/CCITT-FALSE (poly 0x1021, init 0xFFFF, no reflection, no final xor).
inline std::uint16_t crc16_ccitt_false(std::span<const std::uint8_t> bytes) {
    boost::crc_ccitt_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return static_cast<std::uint16_t>(crc.checksum());
}

/// Wire layout (little-endian): magic[2] version node_id:u16 seq:u32 channel_count samples_per_channel
/// flags, then interleaved int16 samples, then the CRC over everything before it.
struct TelemetryPacket {
    std::uint8_t version = kVersion;
    std::uint16_t node_id = 0;
    std::uint32_t seq = 0;
    std::uint8_t channel_count = kDefaultChannels;
    std::uint8_t samples_per_channel = kDefaultSamplesPerChannel;
    std::uint8_t flags = 0;
    std::vector<std::int16_t> payload;  ///< interleaved: s0c0 s0c1 s1c0 ...

    std::size_t wire_length() const { return packet_length(channel_count, samples_per_channel); }

    std::vector<std::int16_t> channel_codes(std::size_t ch) const {
        std::vector<std::int16_t> out;
        out.reserve(samples_per_channel);
        for (std::size_t i = 0; i < samples_per_channel; ++i) out.push_back(payload[i * channel_count + ch]);
        return out;
    }
    std::vector<double> channel_volts(std::size_t ch) const {
        std::vector<double> out;
        out.reserve(samples_per_channel);
        for (std::int16_t c : channel_codes(ch)) out.push_back(c * kVoltsPerLsb);
        return out;
    }

    friend bool operator==(const TelemetryPacket&, const TelemetryPacket&) = default;
};

/// Rounds to the nearest LSB and saturates to +-32767; returns true if it saturated.
inline bool quantize(double v, std::int16_t& code) {
    const double q = std::round(v / kVoltsPerLsb);
    const bool sat = !(std::abs(q) <= 32767.0);
    code = static_cast<std::int16_t>(sat ? (q > 0.0 ? 32767 : -32767) : q);
    return sat;
}

/// Builds a packet from per-channel volt samples; all channels must have equal length in 1..255.
inline TelemetryPacket make_packet(std::uint16_t node_id, std::uint32_t seq,
                                   const std::vector<std::span<const double>>& channels) {
    if (channels.empty() || channels.size() > 255) throw ContractError("make_packet: 1..255 channels required");
    const std::size_t spc = channels.front().size();
    if (spc == 0 || spc > 255) throw ContractError("make_packet: 1..255 samples per channel required");
    for (const auto& c : channels) {
        if (c.size() != spc) throw ContractError("make_packet: channels differ in sample count");
    }
    TelemetryPacket p;
    p.node_id = node_id;
    p.seq = seq;
    p.channel_count = static_cast<std::uint8_t>(channels.size());
    p.samples_per_channel = static_cast<std::uint8_t>(spc);
    p.payload.resize(spc * channels.size());
    for (std::size_t i = 0; i < spc; ++i) {
        for (std::size_t c = 0; c < channels.size(); ++c) {
            if (quantize(channels[c][i], p.payload[i * channels.size() + c])) p.flags |= kFlagSaturated;
        }
    }
    return p;
}

inline std::vector<std::uint8_t> encode(const TelemetryPacket& p) {
    if (p.payload.size() != static_cast<std::size_t>(p.channel_count) * p.samples_per_channel) {
        throw ContractError("encode: payload size disagrees with channel_count * samples_per_channel");
    }
    std::vector<std::uint8_t> out;
    out.reserve(p.wire_length());
    auto put16 = [&](std::uint16_t v) {
        out.push_back(static_cast<std::uint8_t>(v & 0xFF));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    };
    out.push_back(kMagic0);
    out.push_back(kMagic1);
    out.push_back(p.version);
    put16(p.node_id);
    for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(p.seq >> (8 * k)));
    out.push_back(p.channel_count);
    out.push_back(p.samples_per_channel);
    out.push_back(p.flags);
    for (std::int16_t s : p.payload) put16(static_cast<std::uint16_t>(s));
    put16(crc16_ccitt_false(out));
    return out;
}

/// Default two-channel, 100-sample packet.
inline std::vector<std::uint8_t> encode_packet(std::uint16_t node_id, std::uint32_t seq, std::span<const double> ch0,
                                               std::span<const double> ch1) {
    if (ch0.size() != kDefaultSamplesPerChannel || ch1.size() != kDefaultSamplesPerChannel) {
        throw ContractError("encode_packet: exactly 100 samples per channel required");
    }
    return encode(make_packet(node_id, seq, {ch0, ch1}));
}

/// Decodes the packet at the front of `bytes`; never reads past bytes.size().
/// Sets `consumed` to the packet's wire length.
inline TelemetryPacket decode_prefix(std::span<const std::uint8_t> bytes, std::size_t& consumed) {
    if (bytes.size() < kHeaderBytes + kCrcBytes) throw FramingError("packet truncated: shorter than header");
    if (bytes[0] != kMagic0 || bytes[1] != kMagic1) throw FramingError("bad magic");
    auto get16 = [&](std::size_t at) { return static_cast<std::uint16_t>(bytes[at] | (bytes[at + 1] << 8)); };
    const std::uint8_t channels = bytes[9];
    const std::uint8_t spc = bytes[10];
    const std::size_t len = packet_length(channels, spc);
    if (bytes.size() < len) throw FramingError("packet truncated: declared " + std::to_string(len) + " bytes");
    if (crc16_ccitt_false(bytes.first(len - kCrcBytes)) != get16(len - kCrcBytes)) throw IntegrityError("CRC mismatch");
    if (bytes[2] != kVersion) throw VersionError("unsupported version " + std::to_string(bytes[2]));
    if (channels == 0 || spc == 0) throw FramingError("empty payload declared");

    TelemetryPacket p;
    p.version = bytes[2];
    p.node_id = get16(3);
    p.seq = static_cast<std::uint32_t>(bytes[5]) | (static_cast<std::uint32_t>(bytes[6]) << 8) |
            (static_cast<std::uint32_t>(bytes[7]) << 16) | (static_cast<std::uint32_t>(bytes[8]) << 24);
    p.channel_count = channels;
    p.samples_per_channel = spc;
    p.flags = bytes[11];
    p.payload.resize(static_cast<std::size_t>(channels) * spc);
    for (std::size_t i = 0; i < p.payload.size(); ++i) p.payload[i] = static_cast<std::int16_t>(get16(kHeaderBytes + 2 * i));
    consumed = len;
    return p;
}

/// Decodes exactly one packet; trailing bytes are a framing error.
inline TelemetryPacket decode_packet(std::span<const std::uint8_t> bytes) {
    std::size_t used = 0;
    auto p = decode_prefix(bytes, used);
    if (used != bytes.size()) throw FramingError("trailing bytes after packet");
    return p;
}

/// Decodes back-to-back packets.
inline std::vector<TelemetryPacket> decode_stream(std::span<const std::uint8_t> bytes) {
    std::vector<TelemetryPacket> out;
    std::size_t at = 0;
    while (at < bytes.size()) {
        std::size_t used = 0;
        out.push_back(decode_prefix(bytes.subspan(at), used));
        at += used;
    }
    return out;
}

}  // namespace eps::telemetry
