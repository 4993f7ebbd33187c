#pragma once

// End-host state machine. A host can play any mix of roles: victim (detects
// undesired inbound flows and requests blocking), traffic source (compliant,
// request-ignoring, or on-off), and spoofer (floods forged protocol messages).

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <unordered_map>
#include <vector>

#include "aitf/core.hpp"
#include "aitf/node.hpp"

namespace aitf {

enum class SenderBehavior { Compliant, IgnoreRequests, OnOff };

inline const char* to_string(SenderBehavior b) {
    switch (b) {
        case SenderBehavior::Compliant: return "compliant";
        case SenderBehavior::IgnoreRequests: return "ignore";
        case SenderBehavior::OnOff: return "on_off";
    }
    return "?";
}

struct HostFlow {
    std::int32_t flow_id = -1;     // index in the scenario flow table
    PacketHeader header;           // flows emit a fixed header
    std::uint32_t size_bytes = 1000;
    double rate_pps = 100.0;
    SimTime start = 0;
    SenderBehavior behavior = SenderBehavior::Compliant;
    Duration on_ms = 0, off_ms = 0;   // on-off schedule
    // runtime
    bool stopped = false;          // compliant stop; permanent
    SimTime onoff_anchor = 0;      // start of the current on/off cycle pattern
};

struct ClassifierEntry {
    FlowLabel label;
    Duration detection_delay = 0;  // T_d, first detection only
};

// Forged-message generator: an off-path adversary trying to get a legitimate
// flow blocked.
struct SpoofSpec {
    FlowLabel target;              // the flow it wants blocked
    int count = 1000;
    Duration interval = 2;
    SimTime start = 0;
    NodeId attacker_gw = kNoNode;  // where forged TO_ATTACKER_GW requests go
    NodeId victim_gw = kNoNode;    // where forged TO_VICTIM_GW requests go
    NodeId attacker_host = kNoNode;
    NodeId forged_requester = kNoNode;
};

struct HostCounters {
    std::uint64_t requests_sent = 0;
    std::uint64_t replies_sent = 0;
    std::uint64_t queries_ignored = 0;
    std::uint64_t spoofs_sent = 0;
    std::uint64_t flows_stopped = 0;
};

class EndHost {
public:
    EndHost(NodeId id, Address address, NodeId gateway, ProtocolParams params,
            std::uint64_t rng_seed)
        : id_(id), address_(address), gateway_(gateway), params_(params), rng_(rng_seed) {}

    NodeId id() const { return id_; }
    Address address() const { return address_; }
    const HostCounters& counters() const { return counters_; }

    void add_flow(HostFlow flow) {
        flow.onoff_anchor = flow.start;
        flows_by_id_[flow.flow_id] = static_cast<std::uint32_t>(flows_.size());
        header_index_[header_key(flow.header)].push_back(static_cast<std::uint32_t>(flows_.size()));
        flows_.push_back(std::move(flow));
    }

    void add_classifier(ClassifierEntry c) {
        auto idx = static_cast<std::uint32_t>(classifiers_.size());
        if (c.label.src.is_exact())
            exact_classifiers_[key(c.label.src.addr, c.label.dst)].push_back(idx);
        else
            general_classifiers_.push_back(idx);
        classifiers_.push_back(std::move(c));
        victim_state_.emplace_back();
    }

    void set_spoofer(SpoofSpec spec) { spoofer_ = std::move(spec); }
    const std::optional<SpoofSpec>& spoofer() const { return spoofer_; }

    // ------------------------------------------------------------------
    // Emission. Called by the simulator for each FLOW_TICK; returns the
    // packet to send (if the flow is active now) and when to tick next.
    // ------------------------------------------------------------------

    struct TickResult {
        std::optional<DataPacket> packet;
        std::optional<SimTime> next_tick;
        std::uint64_t next_k = 0;
    };

    SimTime emission_time(const HostFlow& f, std::uint64_t k) const {
        return f.start + static_cast<SimTime>(std::llround(double(k) * 1000.0 / f.rate_pps));
    }

    TickResult on_flow_tick(NodeServices& env, std::int32_t flow_id, std::uint64_t k) {
        TickResult out;
        auto it = flows_by_id_.find(flow_id);
        if (it == flows_by_id_.end()) return out;
        HostFlow& f = flows_[it->second];
        if (f.stopped) return out;

        const SimTime now = env.now();
        if (flow_active_at(f, now)) {
            DataPacket pkt;
            pkt.header = f.header;
            pkt.size_bytes = f.size_bytes;
            pkt.flow = flow_id;
            pkt.emitted_at = now;
            out.packet = std::move(pkt);
            out.next_k = k + 1;
            out.next_tick = emission_time(f, k + 1);
            return out;
        }

        // Off phase: skip ahead to the first emission inside the next window.
        const SimTime resume = next_active_time(f, now);
        std::uint64_t k2 = k + 1;
        if (resume > now) {
            const double steps = double(resume - f.start) * f.rate_pps / 1000.0;
            k2 = std::max<std::uint64_t>(k + 1, static_cast<std::uint64_t>(std::ceil(steps - 1e-9)));
        }
        while (emission_time(f, k2) <= now) ++k2;
        out.next_k = k2;
        out.next_tick = emission_time(f, k2);
        return out;
    }

    bool flow_active_at(const HostFlow& f, SimTime t) const {
        if (t < f.start || f.stopped) return false;
        if (f.behavior != SenderBehavior::OnOff) return true;
        if (t < f.onoff_anchor) return false;
        const Duration cycle = f.on_ms + f.off_ms;
        if (cycle <= 0) return true;
        return (t - f.onoff_anchor) % cycle < f.on_ms;
    }

    SimTime next_active_time(const HostFlow& f, SimTime t) const {
        if (f.behavior != SenderBehavior::OnOff) return std::max(t, f.start);
        if (t < f.onoff_anchor) return f.onoff_anchor;
        const Duration cycle = f.on_ms + f.off_ms;
        const SimTime into = (t - f.onoff_anchor) % cycle;
        if (into < f.on_ms) return t;
        return t + (cycle - into);
    }

    // ------------------------------------------------------------------
    // Inbound traffic: victim detection
    // ------------------------------------------------------------------

    void on_packet_delivered(NodeServices& env, const DataPacket& pkt) {
        const SimTime now = env.now();
        auto consider = [&](std::uint32_t c) {
            if (!flow_label_matches(classifiers_[c].label, pkt.header)) return;
            VictimState& st = victim_state_[c];
            st.sample_path = pkt.recorded_route;
            if (st.requested_at == kNever) {
                if (!st.detect_pending) {
                    st.detect_pending = true;
                    emit(env, EventKind::Detected, gateway_, classifiers_[c].label);
                    env.arm_timer(id_, now + classifiers_[c].detection_delay, TimerKind::Detect, c);
                }
            } else if (now - st.requested_at > params_.re_request_quiet) {
                // A matching packet long after our request means the blocking
                // lapsed: re-detection is immediate, no T_d.
                emit(env, EventKind::ReRequested, gateway_, classifiers_[c].label);
                send_request(env, c);
            }
        };
        auto bucket = exact_classifiers_.find(key(pkt.header.src, pkt.header.dst));
        if (bucket != exact_classifiers_.end())
            for (auto c : bucket->second) consider(c);
        for (auto c : general_classifiers_) consider(c);
    }

    // ------------------------------------------------------------------
    // Control plane
    // ------------------------------------------------------------------

    void on_message(NodeServices& env, const AitfMessage& msg, NodeId from_peer) {
        switch (msg.kind) {
            case MsgKind::VerifyQuery: handle_verify_query(env, msg); break;
            case MsgKind::FilterReq:
                if (msg.req_type == ReqType::ToAttacker) handle_stop_request(env, msg, from_peer);
                break;
            default:
                break;
        }
    }

    void on_timer(NodeServices& env, TimerKind kind, std::uint64_t key) {
        switch (kind) {
            case TimerKind::Detect: {
                auto c = static_cast<std::uint32_t>(key);
                if (c < victim_state_.size() && victim_state_[c].detect_pending) {
                    victim_state_[c].detect_pending = false;
                    send_request(env, c);
                }
                break;
            }
            case TimerKind::SpoofTick: spoof_tick(env, key); break;
            default: break;
        }
    }

    bool ever_requested(const FlowLabel& label) const {
        for (std::size_t c = 0; c < classifiers_.size(); ++c)
            if (victim_state_[c].requested_at != kNever &&
                flow_label_equal(classifiers_[c].label, label))
                return true;
        return false;
    }

private:
    struct VictimState {
        SimTime requested_at = kNever;
        bool detect_pending = false;
        std::vector<NodeId> sample_path;
    };

    static std::uint64_t key(Address src, Address dst) {
        return (std::uint64_t(src) << 32) | dst;
    }
    static std::uint64_t header_key(const PacketHeader& h) { return key(h.src, h.dst); }

    void emit(NodeServices& env, EventKind kind, NodeId other, const FlowLabel& label,
              std::string note = {}) {
        ProtoEvent ev;
        ev.t = env.now();
        ev.kind = kind;
        ev.node = id_;
        ev.other = other;
        ev.has_label = true;
        ev.label = label;
        ev.note = std::move(note);
        env.emit(ev);
    }

    void send_request(NodeServices& env, std::uint32_t c) {
        VictimState& st = victim_state_[c];
        AitfMessage req;
        req.kind = MsgKind::FilterReq;
        req.req_type = ReqType::ToVictimGw;
        req.flow_label = classifiers_[c].label;
        req.attack_path = st.sample_path;
        req.requester = id_;
        st.requested_at = env.now();
        ++counters_.requests_sent;
        emit(env, EventKind::RequestSent, gateway_, req.flow_label, "to_victim_gw");
        env.send_adjacent(id_, gateway_, req);
    }

    void handle_verify_query(NodeServices& env, const AitfMessage& msg) {
        const SimTime now = env.now();
        for (std::size_t c = 0; c < classifiers_.size(); ++c) {
            const VictimState& st = victim_state_[c];
            if (st.requested_at == kNever) continue;
            if (!flow_label_equal(classifiers_[c].label, msg.flow_label)) continue;
            if (now - st.requested_at > params_.filter_lifetime) continue;  // memory expired
            AitfMessage reply;
            reply.kind = MsgKind::VerifyReply;
            reply.flow_label = msg.flow_label;
            reply.nonce = msg.nonce;
            reply.requester = id_;
            ++counters_.replies_sent;
            emit(env, EventKind::VerifyReplySent, msg.requester, msg.flow_label);
            env.send_message(id_, msg.requester, reply);
            return;
        }
        ++counters_.queries_ignored;
        emit(env, EventKind::VerifyIgnored, msg.requester, msg.flow_label);
    }

    void handle_stop_request(NodeServices& env, const AitfMessage& msg, NodeId) {
        auto consider = [&](std::uint32_t idx) {
            HostFlow& f = flows_[idx];
            if (!flow_label_matches(msg.flow_label, f.header)) return;
            switch (f.behavior) {
                case SenderBehavior::Compliant:
                    if (!f.stopped) {
                        f.stopped = true;
                        ++counters_.flows_stopped;
                        emit(env, EventKind::FlowStopped, msg.requester, msg.flow_label);
                    }
                    break;
                case SenderBehavior::IgnoreRequests:
                    emit(env, EventKind::RequestIgnored, msg.requester, msg.flow_label);
                    break;
                case SenderBehavior::OnOff:
                    f.onoff_anchor = env.now() + f.off_ms;
                    ++counters_.flows_stopped;
                    emit(env, EventKind::FlowStopped, msg.requester, msg.flow_label, "on_off");
                    break;
            }
        };
        if (msg.flow_label.src.is_exact()) {
            auto it = header_index_.find(key(msg.flow_label.src.addr, msg.flow_label.dst));
            if (it != header_index_.end())
                for (auto idx : it->second) consider(idx);
        } else {
            for (std::uint32_t idx = 0; idx < flows_.size(); ++idx) consider(idx);
        }
    }

    void spoof_tick(NodeServices& env, std::uint64_t seq) {
        if (!spoofer_ || static_cast<int>(seq) >= spoofer_->count) return;
        const SpoofSpec& sp = *spoofer_;
        ++counters_.spoofs_sent;

        switch (seq % 4) {
            case 0:
                if (sp.attacker_gw != kNoNode) {
                    AitfMessage m;
                    m.kind = MsgKind::FilterReq;
                    m.req_type = ReqType::ToAttackerGw;
                    m.flow_label = sp.target;
                    m.attack_path = {sp.attacker_gw};
                    m.requester = sp.forged_requester != kNoNode ? sp.forged_requester : id_;
                    emit(env, EventKind::SpoofSent, sp.attacker_gw, sp.target, "to_attacker_gw");
                    env.send_message(id_, sp.attacker_gw, m);
                }
                break;
            case 1:
                if (sp.attacker_gw != kNoNode) {
                    AitfMessage m;
                    m.kind = MsgKind::VerifyReply;
                    m.flow_label = sp.target;
                    m.nonce = rng_();  // off-path: genuine nonces are never observed
                    m.requester = sp.forged_requester != kNoNode ? sp.forged_requester : id_;
                    emit(env, EventKind::SpoofSent, sp.attacker_gw, sp.target, "forged_reply");
                    env.send_message(id_, sp.attacker_gw, m);
                }
                break;
            case 2:
                if (sp.victim_gw != kNoNode) {
                    AitfMessage m;
                    m.kind = MsgKind::FilterReq;
                    m.req_type = ReqType::ToVictimGw;
                    m.flow_label = sp.target;
                    m.attack_path = {sp.attacker_gw, sp.victim_gw};
                    m.requester = sp.forged_requester != kNoNode ? sp.forged_requester : id_;
                    emit(env, EventKind::SpoofSent, sp.victim_gw, sp.target, "to_victim_gw");
                    env.send_message(id_, sp.victim_gw, m);
                }
                break;
            case 3:
                if (sp.attacker_host != kNoNode) {
                    AitfMessage m;
                    m.kind = MsgKind::FilterReq;
                    m.req_type = ReqType::ToAttacker;
                    m.flow_label = sp.target;
                    m.attack_path = {sp.attacker_gw};
                    m.requester = sp.forged_requester != kNoNode ? sp.forged_requester : id_;
                    emit(env, EventKind::SpoofSent, sp.attacker_host, sp.target, "to_attacker");
                    env.send_message(id_, sp.attacker_host, m);
                }
                break;
        }
        if (static_cast<int>(seq + 1) < sp.count)
            env.arm_timer(id_, env.now() + sp.interval, TimerKind::SpoofTick, seq + 1);
    }

    NodeId id_;
    Address address_;
    NodeId gateway_;
    ProtocolParams params_;
    std::mt19937_64 rng_;

    std::vector<HostFlow> flows_;
    std::unordered_map<std::int32_t, std::uint32_t> flows_by_id_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> header_index_;

    std::vector<ClassifierEntry> classifiers_;
    std::vector<VictimState> victim_state_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> exact_classifiers_;
    std::vector<std::uint32_t> general_classifiers_;

    std::optional<SpoofSpec> spoofer_;
    HostCounters counters_;
};

}  // namespace aitf
