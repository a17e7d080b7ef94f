#pragma once

#include <bit>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "eps/core/error.hpp"
#include "eps/core/waveform.hpp"
#include "eps/telemetry/codec.hpp"
#include "eps/telemetry/transport.hpp"

namespace eps::telemetry {

/// Unrecoverable streaming failure (transport retries exhausted).
class SessionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline constexpr double kNodeSampleRate = 1000.0;

// ---------------------------------------------------------------- node

enum class Pace { realtime, accelerated };

struct NodeOptions {
    std::uint16_t node_id = 1;
    std::uint32_t start_seq = 0;
    Pace pace = Pace::accelerated;
    int max_retries = 4;
    std::chrono::milliseconds base_backoff{1};  ///< doubled per retry
    bool close_when_done = true;
};

struct NodeReport {
    std::size_t packets_sent = 0;
    std::size_t saturated_packets = 0;
    std::size_t dropped_tail_samples = 0;  ///< trailing samples short of a full packet
    std::uint32_t next_seq = 0;
};

/// Frames equal-length 1 kS/s channels into 100-sample packets and sends them in order.
/// Realtime pace releases packet k at start + (k + 1) * 100 ms; packet contents do not depend on pace.
inline NodeReport node_stream(const std::vector<WaveformBuffer>& channels, const NodeOptions& opt, Transport& transport) {
    if (channels.empty() || channels.size() > 255) throw ContractError("node_stream: 1..255 channels required");
    for (const auto& c : channels) {
        if (c.fs() != kNodeSampleRate) throw ContractError("node_stream: channels must be sampled at 1 kS/s");
        if (c.size() != channels.front().size()) throw ContractError("node_stream: channels differ in length");
    }
    const std::size_t spc = kDefaultSamplesPerChannel;
    const std::size_t n_packets = channels.front().size() / spc;
    NodeReport rep;
    rep.dropped_tail_samples = channels.front().size() - n_packets * spc;
    std::uint32_t seq = opt.start_seq;
    const auto t_start = std::chrono::steady_clock::now();
    for (std::size_t k = 0; k < n_packets; ++k) {
        std::vector<std::span<const double>> views;
        for (const auto& c : channels) views.push_back(c.samples().subspan(k * spc, spc));
        const auto pkt = make_packet(opt.node_id, seq, views);
        const auto bytes = encode(pkt);
        if (opt.pace == Pace::realtime) {
            std::this_thread::sleep_until(t_start + std::chrono::milliseconds(100) * static_cast<long>(k + 1));
        }
        for (int attempt = 0;; ++attempt) {
            try {
                transport.send(bytes);
                break;
            } catch (const TransportError& e) {
                if (attempt >= opt.max_retries) {
                    throw SessionError("node_stream: send of seq " + std::to_string(seq) + " failed after " +
                                       std::to_string(attempt + 1) + " attempts: " + e.what());
                }
                std::this_thread::sleep_for(opt.base_backoff * (1L << attempt));
            }
        }
        ++rep.packets_sent;
        if (pkt.flags & kFlagSaturated) ++rep.saturated_packets;
        ++seq;  // wraps at 2^32
    }
    rep.next_seq = seq;
    if (opt.close_when_done) transport.close();
    return rep;
}

// ---------------------------------------------------------------- session log

struct PacketRecord {
    double base_time = 0.0;  ///< base clock, s
    TelemetryPacket packet;
    friend bool operator==(const PacketRecord&, const PacketRecord&) = default;
};

/// Inclusive range of missing sequence numbers; may straddle the 2^32 wrap.
struct SeqRange {
    std::uint32_t first = 0;
    std::uint32_t last = 0;
    std::uint32_t count() const { return last - first + 1; }
    friend bool operator==(const SeqRange&, const SeqRange&) = default;
};

enum class AnomalyKind : std::uint8_t { decode_error = 1, late_dropped, duplicate, foreign_node, layout_mismatch };

struct Anomaly {
    AnomalyKind kind = AnomalyKind::decode_error;
    std::uint32_t seq = 0;
    std::string detail;
    friend bool operator==(const Anomaly&, const Anomaly&) = default;
};

struct SessionLog {
    std::uint16_t node_id = 0;
    double start_time = 0.0;  ///< wall-clock epoch seconds at session start
    std::vector<PacketRecord> records;  ///< in sequence order
    std::vector<SeqRange> gaps;
    std::vector<Anomaly> anomalies;

    /// Concatenated samples of channel ch over all received packets (gaps skipped).
    std::vector<double> channel(std::size_t ch) const {
        std::vector<double> out;
        for (const auto& r : records) {
            const auto v = r.packet.channel_volts(ch);
            out.insert(out.end(), v.begin(), v.end());
        }
        return out;
    }
    friend bool operator==(const SessionLog&, const SessionLog&) = default;
};

/// Sequence reassembly with a bounded reorder window. Packets are released in seq order and
/// stamped with the time of the receive event that released them, so stamps never decrease.
class Reassembler {
public:
    explicit Reassembler(SessionLog& log, std::uint32_t window = 16) : log_(log), window_(window) {}

    void push(TelemetryPacket p, double t) {
        if (!next_) {
            next_ = p.seq;
            log_.node_id = p.node_id;
            layout_ = {p.channel_count, p.samples_per_channel};
        }
        if (p.node_id != log_.node_id) {
            log_.anomalies.push_back({AnomalyKind::foreign_node, p.seq, "node " + std::to_string(p.node_id)});
            return;
        }
        if (std::make_pair(p.channel_count, p.samples_per_channel) != layout_) {
            log_.anomalies.push_back({AnomalyKind::layout_mismatch, p.seq, "layout differs from first packet"});
            return;
        }
        std::uint32_t d = p.seq - *next_;
        if (d >= 0x80000000u) {
            log_.anomalies.push_back({AnomalyKind::late_dropped, p.seq, "behind reorder window"});
            return;
        }
        if (d >= window_) {
            advance(d - (window_ - 1), t);
            d = window_ - 1;
        }
        if (buf_.size() <= d) buf_.resize(d + 1);
        if (buf_[d]) {
            log_.anomalies.push_back({AnomalyKind::duplicate, p.seq, "duplicate sequence number"});
            return;
        }
        buf_[d] = std::move(p);
        release(t);
    }

    /// Flushes everything still buffered, recording holes as gaps.
    void finish(double t) { advance(static_cast<std::uint32_t>(buf_.size()), t); }

private:
    void release(double t) {
        while (!buf_.empty() && buf_.front()) {
            log_.records.push_back({t, std::move(*buf_.front())});
            buf_.pop_front();
            ++*next_;
        }
    }

    void advance(std::uint32_t shift, double t) {
        std::uint32_t done = 0;
        while (done < shift && !buf_.empty()) {
            if (buf_.front()) {
                log_.records.push_back({t, std::move(*buf_.front())});
            } else {
                add_gap(*next_, 1);
            }
            buf_.pop_front();
            ++*next_;
            ++done;
        }
        if (done < shift) {
            add_gap(*next_, shift - done);
            *next_ += shift - done;
        }
        release(t);
    }

    void add_gap(std::uint32_t first, std::uint32_t count) {
        const std::uint32_t last = first + count - 1;
        if (!log_.gaps.empty() && log_.gaps.back().last + 1 == first) {
            log_.gaps.back().last = last;
        } else {
            log_.gaps.push_back({first, last});
        }
    }

    SessionLog& log_;
    std::uint32_t window_;
    std::optional<std::uint32_t> next_;
    std::pair<std::uint8_t, std::uint8_t> layout_{0, 0};
    std::deque<std::optional<TelemetryPacket>> buf_;
};

struct BaseOptions {
    std::chrono::milliseconds idle_timeout{1000};
    std::uint32_t reorder_window = 16;
    /// Base clock in seconds; defaults to a monotonic clock started at session start.
    std::function<double()> clock;
};

/// Receives until the transport closes or stays silent for idle_timeout. Never throws on bad input;
/// every anomaly lands in the log.
inline SessionLog base_receive(Transport& transport, const BaseOptions& opt = {}) {
    SessionLog log;
    log.start_time =
        std::chrono::duration<double>(std::chrono::system_clock::now().time_since_epoch()).count();
    const auto t0 = std::chrono::steady_clock::now();
    auto clock = opt.clock ? opt.clock : [t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };
    Reassembler reasm(log, opt.reorder_window);
    double last_t = 0.0;
    while (auto d = transport.receive(opt.idle_timeout)) {
        last_t = std::max(last_t, clock());
        try {
            reasm.push(decode_packet(*d), last_t);
        } catch (const DecodeError& e) {
            log.anomalies.push_back({AnomalyKind::decode_error, 0, e.what()});
        }
    }
    reasm.finish(last_t);
    return log;
}

// ---------------------------------------------------------------- session file

namespace detail {
inline void put_u(std::vector<std::uint8_t>& out, std::uint64_t v, int bytes) {
    for (int k = 0; k < bytes; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
inline void put_f64(std::vector<std::uint8_t>& out, double v) { put_u(out, std::bit_cast<std::uint64_t>(v), 8); }

class Reader {
public:
    Reader(std::span<const std::uint8_t> b, std::string path) : b_(b), path_(std::move(path)) {}
    std::uint64_t u(int bytes) {
        need(static_cast<std::size_t>(bytes));
        std::uint64_t v = 0;
        for (int k = 0; k < bytes; ++k) v |= static_cast<std::uint64_t>(b_[at_++]) << (8 * k);
        return v;
    }
    double f64() { return std::bit_cast<double>(u(8)); }
    std::span<const std::uint8_t> bytes(std::size_t n) {
        need(n);
        auto s = b_.subspan(at_, n);
        at_ += n;
        return s;
    }
    void expect(const char* tag) {
        auto s = bytes(4);
        if (std::memcmp(s.data(), tag, 4) != 0) throw IoError(path_, std::string("missing '") + tag + "' marker");
    }
    std::size_t pos() const { return at_; }
    void seek(std::size_t p) {
        if (p > b_.size()) throw IoError(path_, "offset past end of file");
        at_ = p;
    }

private:
    void need(std::size_t n) const {
        if (at_ + n > b_.size()) throw IoError(path_, "truncated session file");
    }
    std::span<const std::uint8_t> b_;
    std::string path_;
    std::size_t at_ = 0;
};
}  // namespace detail

inline constexpr std::uint16_t kSessionVersion = 1;

/// Layout (little-endian): "EPSS" version:u16 node_id:u16 start_time:f64, then per packet
/// base_time:f64 length:u16 packet-bytes, then the index "EPSI" gaps anomalies, then the trailer
/// record_count:u32 index_offset:u64 "EPSE".
inline std::vector<std::uint8_t> serialize_session(const SessionLog& log) {
    std::vector<std::uint8_t> out{'E', 'P', 'S', 'S'};
    detail::put_u(out, kSessionVersion, 2);
    detail::put_u(out, log.node_id, 2);
    detail::put_f64(out, log.start_time);
    for (const auto& r : log.records) {
        const auto bytes = encode(r.packet);
        detail::put_f64(out, r.base_time);
        detail::put_u(out, bytes.size(), 2);
        out.insert(out.end(), bytes.begin(), bytes.end());
    }
    const std::uint64_t index_at = out.size();
    out.insert(out.end(), {'E', 'P', 'S', 'I'});
    detail::put_u(out, log.gaps.size(), 4);
    for (const auto& g : log.gaps) {
        detail::put_u(out, g.first, 4);
        detail::put_u(out, g.last, 4);
    }
    detail::put_u(out, log.anomalies.size(), 4);
    for (const auto& a : log.anomalies) {
        detail::put_u(out, static_cast<std::uint8_t>(a.kind), 1);
        detail::put_u(out, a.seq, 4);
        const std::string d = a.detail.substr(0, 0xFFFF);
        detail::put_u(out, d.size(), 2);
        out.insert(out.end(), d.begin(), d.end());
    }
    detail::put_u(out, log.records.size(), 4);
    detail::put_u(out, index_at, 8);
    out.insert(out.end(), {'E', 'P', 'S', 'E'});
    return out;
}

inline SessionLog parse_session(std::span<const std::uint8_t> bytes, const std::string& path = "<memory>") {
    constexpr std::size_t kTrailer = 4 + 8 + 4;
    if (bytes.size() < 16 + kTrailer) throw IoError(path, "file too short for a session");
    detail::Reader rd(bytes, path);
    rd.expect("EPSS");
    if (rd.u(2) != kSessionVersion) throw IoError(path, "unsupported session version");
    SessionLog log;
    log.node_id = static_cast<std::uint16_t>(rd.u(2));
    log.start_time = rd.f64();
    const std::size_t records_at = rd.pos();

    rd.seek(bytes.size() - kTrailer);
    const auto count = static_cast<std::size_t>(rd.u(4));
    const auto index_at = static_cast<std::size_t>(rd.u(8));
    rd.expect("EPSE");
    if (index_at < records_at || index_at > bytes.size() - kTrailer) throw IoError(path, "corrupt index offset");

    rd.seek(records_at);
    while (rd.pos() < index_at) {
        PacketRecord r;
        r.base_time = rd.f64();
        const auto len = static_cast<std::size_t>(rd.u(2));
        try {
            r.packet = decode_packet(rd.bytes(len));
        } catch (const DecodeError& e) {
            throw IoError(path, std::string("corrupt packet record: ") + e.what());
        }
        log.records.push_back(std::move(r));
    }
    if (rd.pos() != index_at || log.records.size() != count) throw IoError(path, "record section inconsistent with trailer");

    rd.expect("EPSI");
    const auto n_gaps = rd.u(4);
    for (std::uint64_t i = 0; i < n_gaps; ++i) {
        SeqRange g;
        g.first = static_cast<std::uint32_t>(rd.u(4));
        g.last = static_cast<std::uint32_t>(rd.u(4));
        log.gaps.push_back(g);
    }
    const auto n_anom = rd.u(4);
    for (std::uint64_t i = 0; i < n_anom; ++i) {
        Anomaly a;
        a.kind = static_cast<AnomalyKind>(rd.u(1));
        a.seq = static_cast<std::uint32_t>(rd.u(4));
        const auto len = static_cast<std::size_t>(rd.u(2));
        const auto s = rd.bytes(len);
        a.detail.assign(s.begin(), s.end());
        log.anomalies.push_back(std::move(a));
    }
    if (rd.pos() != bytes.size() - kTrailer) throw IoError(path, "index section inconsistent with trailer");
    return log;
}

inline void write_session(const SessionLog& log, const std::string& path) {
    const auto bytes = serialize_session(log);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoError(path, "cannot open for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw IoError(path, "write failed");
}

inline std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoError(path, "cannot open for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    if (f.bad()) throw IoError(path, "read failed");
    return bytes;
}

inline SessionLog read_session(const std::string& path) { return parse_session(read_file_bytes(path), path); }

// ---------------------------------------------------------------- replay

/// Channels on a continuous sample grid from the first to the last received packet. Missing packets
/// read as 0 V with valid == false; gap_samples lists them as half-open sample ranges.
struct Replay {
    std::vector<WaveformBuffer> channels;
    std::vector<bool> valid;
    std::vector<std::pair<std::size_t, std::size_t>> gap_samples;
};

inline Replay replay(const SessionLog& log, double fs = kNodeSampleRate) {
    Replay out;
    if (log.records.empty()) return out;
    const auto& first = log.records.front().packet;
    const std::size_t spc = first.samples_per_channel;
    const std::uint32_t seq0 = first.seq;
    const std::size_t span_packets = static_cast<std::size_t>(log.records.back().packet.seq - seq0) + 1;
    const std::size_t n = span_packets * spc;
    std::vector<std::vector<double>> ch(first.channel_count, std::vector<double>(n, 0.0));
    out.valid.assign(n, false);
    for (const auto& r : log.records) {
        const std::size_t base = static_cast<std::size_t>(r.packet.seq - seq0) * spc;
        for (std::size_t c = 0; c < ch.size(); ++c) {
            const auto v = r.packet.channel_volts(c);
            std::copy(v.begin(), v.end(), ch[c].begin() + static_cast<std::ptrdiff_t>(base));
        }
        std::fill_n(out.valid.begin() + static_cast<std::ptrdiff_t>(base), spc, true);
    }
    for (std::size_t i = 0; i < n;) {
        if (out.valid[i]) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && !out.valid[j]) ++j;
        out.gap_samples.emplace_back(i, j);
        i = j;
    }
    for (std::size_t c = 0; c < ch.size(); ++c) {
        out.channels.emplace_back(std::move(ch[c]), fs, 0.0, "replay_ch" + std::to_string(c));
    }
    return out;
}

/// Writes the session, reads it back from disk and replays what was read.
inline Replay persist_and_replay(const SessionLog& log, const std::string& path) {
    write_session(log, path);
    return replay(read_session(path));
}

}  // namespace eps::telemetry
