#pragma once

// Domain types shared by every part of the simulator: addresses, virtual
// time, flow labels, packets, protocol messages, and protocol parameters.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace aitf {

// Virtual time. Integer milliseconds; all protocol timers are durations in ms.
using SimTime = std::int64_t;
using Duration = std::int64_t;

inline constexpr SimTime kNever = -1;

// Index of a node within one topology. Stable for the lifetime of a run.
using NodeId = std::uint32_t;
inline constexpr NodeId kNoNode = 0xffffffffu;

// Routable end-host/router address, IPv4-style for config readability.
using Address = std::uint32_t;

inline std::string format_address(Address a) {
    return std::to_string((a >> 24) & 0xff) + "." + std::to_string((a >> 16) & 0xff) + "." +
           std::to_string((a >> 8) & 0xff) + "." + std::to_string(a & 0xff);
}

inline Address parse_address(const std::string& s) {
    Address out = 0;
    int octets = 0;
    std::size_t i = 0;
    while (i < s.size()) {
        if (!isdigit(static_cast<unsigned char>(s[i])))
            throw std::invalid_argument("bad address: " + s);
        long v = 0;
        while (i < s.size() && isdigit(static_cast<unsigned char>(s[i]))) {
            v = v * 10 + (s[i] - '0');
            if (v > 255) throw std::invalid_argument("bad address octet: " + s);
            ++i;
        }
        out = (out << 8) | static_cast<Address>(v);
        ++octets;
        if (i < s.size()) {
            if (s[i] != '.' || octets == 4) throw std::invalid_argument("bad address: " + s);
            ++i;
        }
    }
    if (octets != 4) throw std::invalid_argument("bad address: " + s);
    return out;
}

// Address block: base address plus mask length in [0, 32].
// len == 32 is an exact address, len == 0 matches everything.
struct Prefix {
    Address addr = 0;
    int len = 32;

    static Prefix exact(Address a) { return {a, 32}; }
    static Prefix any() { return {0, 0}; }

    bool is_exact() const { return len == 32; }
    bool is_any() const { return len == 0; }

    std::uint32_t mask() const {
        return len == 0 ? 0u : (0xffffffffu << (32 - len));
    }
    bool contains(Address a) const { return ((a ^ addr) & mask()) == 0; }
    // True when every address in `other` is inside this prefix.
    bool contains(const Prefix& other) const {
        return len <= other.len && contains(other.addr);
    }
    bool operator==(const Prefix& o) const {
        return len == o.len && (addr & mask()) == (o.addr & o.mask());
    }
};

inline std::string format_prefix(const Prefix& p) {
    if (p.is_any()) return "*";
    if (p.is_exact()) return format_address(p.addr);
    return format_address(p.addr) + "/" + std::to_string(p.len);
}

inline Prefix parse_prefix(const std::string& s) {
    if (s == "*") return Prefix::any();
    auto slash = s.find('/');
    if (slash == std::string::npos) return Prefix::exact(parse_address(s));
    int len = std::stoi(s.substr(slash + 1));
    if (len < 0 || len > 32) throw std::invalid_argument("bad prefix length: " + s);
    return {parse_address(s.substr(0, slash)), len};
}

// Concrete per-packet header fields. Flows in this model emit a fixed header.
struct PacketHeader {
    Address src = 0;
    Address dst = 0;
    std::uint8_t proto = 17;  // UDP unless configured otherwise
    std::uint16_t sport = 0;
    std::uint16_t dport = 0;
};

// Wildcardable description of a traffic flow; the unit being blocked.
// dst is always exact: a requester may only name a concrete destination.
struct FlowLabel {
    Prefix src = Prefix::any();
    Address dst = 0;
    std::optional<std::uint8_t> proto;
    std::optional<std::uint16_t> sport;
    std::optional<std::uint16_t> dport;
};

// True iff every specified field of the label equals/contains the header's.
inline bool flow_label_matches(const FlowLabel& label, const PacketHeader& h) {
    if (!label.src.contains(h.src)) return false;
    if (label.dst != h.dst) return false;
    if (label.proto && *label.proto != h.proto) return false;
    if (label.sport && *label.sport != h.sport) return false;
    if (label.dport && *label.dport != h.dport) return false;
    return true;
}

// True iff every header matched by `specific` is matched by `general`.
inline bool flow_label_subsumes(const FlowLabel& general, const FlowLabel& specific) {
    if (!general.src.contains(specific.src)) return false;
    if (general.dst != specific.dst) return false;
    if (general.proto && (!specific.proto || *general.proto != *specific.proto)) return false;
    if (general.sport && (!specific.sport || *general.sport != *specific.sport)) return false;
    if (general.dport && (!specific.dport || *general.dport != *specific.dport)) return false;
    return true;
}

inline bool flow_label_equal(const FlowLabel& a, const FlowLabel& b) {
    return flow_label_subsumes(a, b) && flow_label_subsumes(b, a);
}

// Rendered as "src>dst[:proto[:sport>dport]]"; wildcard fields print as "*".
inline std::string format_flow_label(const FlowLabel& l) {
    std::string out = format_prefix(l.src) + ">" + format_address(l.dst);
    const bool has_ports = l.sport || l.dport;
    if (l.proto || has_ports) {
        out += ":";
        out += l.proto ? std::to_string(int(*l.proto)) : "*";
    }
    if (has_ports) {
        out += ":";
        out += l.sport ? std::to_string(*l.sport) : "*";
        out += ">";
        out += l.dport ? std::to_string(*l.dport) : "*";
    }
    return out;
}

inline FlowLabel parse_flow_label(const std::string& s) {
    auto gt = s.find('>');
    if (gt == std::string::npos) throw std::invalid_argument("bad flow label: " + s);
    FlowLabel l;
    l.src = parse_prefix(s.substr(0, gt));
    std::string rest = s.substr(gt + 1);
    auto colon = rest.find(':');
    l.dst = parse_address(rest.substr(0, colon));
    if (colon == std::string::npos) return l;
    rest = rest.substr(colon + 1);
    colon = rest.find(':');
    std::string proto = rest.substr(0, colon);
    if (proto != "*") l.proto = static_cast<std::uint8_t>(std::stoi(proto));
    if (colon == std::string::npos) return l;
    rest = rest.substr(colon + 1);
    gt = rest.find('>');
    if (gt == std::string::npos) throw std::invalid_argument("bad flow label ports: " + s);
    std::string sp = rest.substr(0, gt), dp = rest.substr(gt + 1);
    if (sp != "*") l.sport = static_cast<std::uint16_t>(std::stoi(sp));
    if (dp != "*") l.dport = static_cast<std::uint16_t>(std::stoi(dp));
    return l;
}

// A data packet in flight. recorded_route lists the border routers traversed,
// appended in transit order; this is what stands in for traceback.
struct DataPacket {
    PacketHeader header;
    std::uint32_t size_bytes = 1000;
    std::vector<NodeId> recorded_route;
    std::int32_t flow = -1;        // index into the scenario flow table
    SimTime emitted_at = 0;
};

enum class MsgKind { FilterReq, VerifyQuery, VerifyReply };
enum class ReqType { ToVictimGw, ToAttackerGw, ToAttacker };

inline const char* to_string(MsgKind k) {
    switch (k) {
        case MsgKind::FilterReq: return "FILTER_REQ";
        case MsgKind::VerifyQuery: return "VERIFY_QUERY";
        case MsgKind::VerifyReply: return "VERIFY_REPLY";
    }
    return "?";
}

inline const char* to_string(ReqType t) {
    switch (t) {
        case ReqType::ToVictimGw: return "TO_VICTIM_GW";
        case ReqType::ToAttackerGw: return "TO_ATTACKER_GW";
        case ReqType::ToAttacker: return "TO_ATTACKER";
    }
    return "?";
}

// Filtering request / verification query / verification reply.
struct AitfMessage {
    MsgKind kind = MsgKind::FilterReq;
    ReqType req_type = ReqType::ToVictimGw;   // FILTER_REQ only
    FlowLabel flow_label;
    std::uint64_t nonce = 0;                  // VERIFY_* only
    std::vector<NodeId> attack_path;          // FILTER_REQ only, from a sample packet
    NodeId requester = kNoNode;
};

// Protocol timers. T_tmp must stay well below T.
struct ProtocolParams {
    Duration filter_lifetime = 60'000;        // T: long-term filter + shadow retention
    Duration temp_filter_lifetime = 600;      // T_tmp: victim-gateway temporary filter
    Duration grace_attacker = 200;            // attacker must stop within it
    Duration grace_victim_gw = 500;           // quiet window judged before temp expiry
    Duration handshake_timeout = 1'000;
    Duration disconnect_duration = 0;         // 0 = rest of run
    Duration re_request_quiet = 500;          // host-side gap that marks a resumption

    void validate() const {
        if (filter_lifetime <= 0 || temp_filter_lifetime <= 0 || grace_attacker <= 0 ||
            grace_victim_gw <= 0 || handshake_timeout <= 0 || re_request_quiet <= 0)
            throw std::invalid_argument("params: all durations must be positive");
        if (temp_filter_lifetime >= filter_lifetime)
            throw std::invalid_argument("params: t_tmp_ms must be smaller than t_ms");
        if (disconnect_duration < 0)
            throw std::invalid_argument("params: disconnect_ms must be >= 0");
    }
};

}  // namespace aitf
