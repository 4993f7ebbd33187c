#pragma once

// The AITF state machines: end-host (victim/attacker/spoofer roles) and
// border router (victim's-gateway and attacker's-gateway roles), including
// the 3-way handshake, escalation rounds, on-off re-detection via the shadow
// log, grace enforcement, and disconnection.
//
// Each machine is a deterministic transition function: event in, state
// mutation plus emitted messages/timers out, through the NodeServices
// interface the simulator (or a test fixture) provides.

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "aitf/contract.hpp"
#include "aitf/core.hpp"
#include "aitf/tables.hpp"

namespace aitf {

enum class TimerKind : std::uint8_t { EscalationCheck, HandshakeTimeout, Detect, SpoofTick };

enum class EventKind : std::uint8_t {
    RequestSent,
    PolicerDrop,
    IngressRejected,
    RequestDiscarded,
    FilterInstalled,
    FilterRefreshed,
    FilterRemoved,     // quiet removal at temp-filter expiry
    TableFull,
    ShadowLogged,
    ShadowRefreshed,
    ShadowOverflow,
    ShadowHit,         // on-off resumption caught from DRAM
    VerifyQuerySent,
    VerifyReplySent,
    VerifyIgnored,     // query for a flow the host never complained about
    HandshakeOk,
    HandshakeTimeout,
    NonceMismatch,
    Escalated,
    Disconnected,
    RequestIgnored,    // non-cooperative node dropping a request on the floor
    FlowStopped,
    Detected,
    ReRequested,
    SpoofSent,
};

inline const char* to_string(EventKind k) {
    switch (k) {
        case EventKind::RequestSent: return "request_sent";
        case EventKind::PolicerDrop: return "policer_drop";
        case EventKind::IngressRejected: return "ingress_rejected";
        case EventKind::RequestDiscarded: return "request_discarded";
        case EventKind::FilterInstalled: return "filter_installed";
        case EventKind::FilterRefreshed: return "filter_refreshed";
        case EventKind::FilterRemoved: return "filter_removed";
        case EventKind::TableFull: return "table_full";
        case EventKind::ShadowLogged: return "shadow_logged";
        case EventKind::ShadowRefreshed: return "shadow_refreshed";
        case EventKind::ShadowOverflow: return "shadow_overflow";
        case EventKind::ShadowHit: return "shadow_hit";
        case EventKind::VerifyQuerySent: return "verify_query_sent";
        case EventKind::VerifyReplySent: return "verify_reply_sent";
        case EventKind::VerifyIgnored: return "verify_ignored";
        case EventKind::HandshakeOk: return "handshake_ok";
        case EventKind::HandshakeTimeout: return "handshake_timeout";
        case EventKind::NonceMismatch: return "nonce_mismatch";
        case EventKind::Escalated: return "escalated";
        case EventKind::Disconnected: return "disconnected";
        case EventKind::RequestIgnored: return "request_ignored";
        case EventKind::FlowStopped: return "flow_stopped";
        case EventKind::Detected: return "detected";
        case EventKind::ReRequested: return "re_requested";
        case EventKind::SpoofSent: return "spoof_sent";
    }
    return "?";
}

// One protocol-level occurrence, feeding both the event trace and metrics.
struct ProtoEvent {
    SimTime t = 0;
    EventKind kind = EventKind::RequestSent;
    NodeId node = kNoNode;
    NodeId other = kNoNode;       // peer / target, when meaningful
    bool has_label = false;
    FlowLabel label;
    int round = 0;                // escalation round, when meaningful
    Duration lifetime = 0;        // filter lifetime, when meaningful
    std::string note;
};

// Everything a state machine may ask of its surroundings.
class NodeServices {
public:
    virtual ~NodeServices() = default;
    virtual SimTime now() const = 0;
    // Routed delivery of a control message to any node.
    virtual void send_message(NodeId from, NodeId to, const AitfMessage& msg) = 0;
    // Single-hop delivery to an adjacent peer (TO_ATTACKER requests are
    // link-scoped: a transit copy anywhere is forged by construction).
    virtual void send_adjacent(NodeId from, NodeId peer, const AitfMessage& msg) = 0;
    virtual void arm_timer(NodeId node, SimTime fire_at, TimerKind kind, std::uint64_t key) = 0;
    // Ingress check: does `router` reach `dst` through `via_peer`?
    virtual bool routes_toward(NodeId router, Address dst, NodeId via_peer) const = 0;
    virtual NodeId node_for_address(Address a) const = 0;
    virtual bool adjacent(NodeId a, NodeId b) const = 0;
    virtual void disconnect_edge(NodeId a, NodeId b, SimTime until) = 0;  // kNever = rest of run
    virtual void emit(const ProtoEvent& ev) = 0;
};

struct RouterCounters {
    std::uint64_t requests_received = 0;
    std::uint64_t requests_accepted = 0;
    std::uint64_t requests_sent = 0;
    std::uint64_t policer_dropped_in = 0;
    std::uint64_t policer_dropped_out = 0;
    std::uint64_t ingress_rejected = 0;
    std::uint64_t handshakes_started = 0;
    std::uint64_t handshakes_completed = 0;
    std::uint64_t handshake_timeouts = 0;
    std::uint64_t nonce_mismatches = 0;
    std::uint64_t shadow_hits = 0;
};

enum class PacketVerdict { Forward, DropFilter };

// A border router. `cooperative = false` models a gateway that ignores
// filtering requests addressed to it; it still forwards traffic.
class BorderRouter {
public:
    BorderRouter(NodeId id, ProtocolParams params, std::size_t filter_capacity,
                 std::size_t shadow_capacity, std::uint64_t rng_seed, bool cooperative = true)
        : id_(id),
          params_(params),
          cooperative_(cooperative),
          filters_(filter_capacity),
          shadow_(shadow_capacity),
          rng_(rng_seed) {}

    NodeId id() const { return id_; }
    const ProtocolParams& params() const { return params_; }
    bool cooperative() const { return cooperative_; }

    void set_edge_rates(NodeId peer, RequestRate inbound, RequestRate outbound) {
        edges_[peer] = EdgeState{inbound, outbound, {}, {}};
    }

    FilterTable& filters() { return filters_; }
    const FilterTable& filters() const { return filters_; }
    ShadowLog& shadow() { return shadow_; }
    const ShadowLog& shadow() const { return shadow_; }
    const RouterCounters& counters() const { return counters_; }
    std::size_t pending_handshakes() const { return pending_.size(); }

    // ------------------------------------------------------------------
    // Control plane
    // ------------------------------------------------------------------

    void on_message(NodeServices& env, const AitfMessage& msg, NodeId from_peer) {
        switch (msg.kind) {
            case MsgKind::FilterReq:
                ++counters_.requests_received;
                if (!police_inbound(env, from_peer)) return;
                switch (msg.req_type) {
                    case ReqType::ToVictimGw: handle_as_victim_gw(env, msg, from_peer); break;
                    case ReqType::ToAttackerGw: handle_as_attacker_gw(env, msg, from_peer); break;
                    case ReqType::ToAttacker: handle_as_attacker_role(env, msg, from_peer); break;
                }
                break;
            case MsgKind::VerifyReply:
                handle_verify_reply(env, msg);
                break;
            case MsgKind::VerifyQuery:
                // queries are answered by end-hosts; a router stays silent
                break;
        }
    }

    void on_timer(NodeServices& env, TimerKind kind, std::uint64_t key) {
        switch (kind) {
            case TimerKind::EscalationCheck: escalation_check(env, static_cast<std::uint32_t>(key)); break;
            case TimerKind::HandshakeTimeout: handshake_timeout(env, key); break;
            default: break;
        }
    }

    // ------------------------------------------------------------------
    // Data plane
    // ------------------------------------------------------------------

    PacketVerdict on_data_packet(NodeServices& env, DataPacket& pkt, NodeId from_peer) {
        const SimTime now = env.now();

        if (auto hit = filters_.match(pkt.header, now)) {
            if (auto w = escalation_watch_.find(*hit); w != escalation_watch_.end())
                w->second.last_drop = now;
            grace_tripwire(env, *hit, from_peer, now);
            return PacketVerdict::DropFilter;
        }

        // On-off detection: a header with no live filter but a live shadow
        // entry means the attacker side of the current round reneged.
        if (const ShadowEntry* se = shadow_.lookup(pkt.header, now)) {
            ++counters_.shadow_hits;
            emit(env, EventKind::ShadowHit, kNoNode, se->label);
            RequestOrigin origin = se->origin;
            reinstall_temp(env, se->label, origin);
            escalate_one_round(env, se->label, origin);
            return PacketVerdict::DropFilter;
        }

        pkt.recorded_route.push_back(id_);
        return PacketVerdict::Forward;
    }

private:
    struct EdgeState {
        RequestRate inbound;   // requests arriving through this edge
        RequestRate outbound;  // requests we may send toward this peer
        PolicerState in_policer;
        PolicerState out_policer;
    };

    struct PendingHandshake {
        FlowLabel label;
        NodeId requester = kNoNode;
        std::vector<NodeId> attack_path;
        SimTime sent_at = 0;
        NodeId from_peer = kNoNode;
    };

    struct EscalationWatch {
        FlowLabel label;
        RequestOrigin origin;
        int round = 1;
        SimTime check_at = 0;
        SimTime last_drop = kNever;
        std::uint32_t filter_entry = 0;
    };

    struct GraceWatch {
        NodeId peer = kNoNode;
        SimTime deadline = 0;
    };

    // --- helpers -------------------------------------------------------

    void emit(NodeServices& env, EventKind kind, NodeId other, const FlowLabel& label,
              int round = 0, Duration lifetime = 0, std::string note = {}) {
        ProtoEvent ev;
        ev.t = env.now();
        ev.kind = kind;
        ev.node = id_;
        ev.other = other;
        ev.has_label = true;
        ev.label = label;
        ev.round = round;
        ev.lifetime = lifetime;
        ev.note = std::move(note);
        env.emit(ev);
    }
    void emit_plain(NodeServices& env, EventKind kind, NodeId other, std::string note = {}) {
        ProtoEvent ev;
        ev.t = env.now();
        ev.kind = kind;
        ev.node = id_;
        ev.other = other;
        ev.note = std::move(note);
        env.emit(ev);
    }

    bool police_inbound(NodeServices& env, NodeId from_peer) {
        auto it = edges_.find(from_peer);
        if (it == edges_.end()) return true;  // no contract configured on this edge
        if (it->second.in_policer.police(it->second.inbound, env.now()) == PoliceResult::Drop) {
            ++counters_.policer_dropped_in;
            emit_plain(env, EventKind::PolicerDrop, from_peer, "in");
            return false;
        }
        ++counters_.requests_accepted;
        return true;
    }

    bool police_outbound(NodeServices& env, NodeId to_peer) {
        auto it = edges_.find(to_peer);
        if (it == edges_.end()) return true;
        if (it->second.out_policer.police(it->second.outbound, env.now()) == PoliceResult::Drop) {
            ++counters_.policer_dropped_out;
            emit_plain(env, EventKind::PolicerDrop, to_peer, "out");
            return false;
        }
        return true;
    }

    // Index of this router on the recorded attack path, or npos.
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);
    std::size_t path_index(const std::vector<NodeId>& path) const {
        for (std::size_t i = 0; i < path.size(); ++i)
            if (path[i] == id_) return i;
        return npos;
    }

    // --- victim's gateway role ------------------------------------------

    void handle_as_victim_gw(NodeServices& env, const AitfMessage& msg, NodeId from_peer) {
        const SimTime now = env.now();

        if (!env.routes_toward(id_, msg.flow_label.dst, from_peer)) {
            ++counters_.ingress_rejected;
            emit(env, EventKind::IngressRejected, from_peer, msg.flow_label);
            return;
        }
        if (msg.attack_path.empty()) {
            emit(env, EventKind::RequestDiscarded, from_peer, msg.flow_label, 0, 0, "no attack path");
            return;
        }
        const std::size_t i = path_index(msg.attack_path);
        if (i == npos) {
            emit(env, EventKind::RequestDiscarded, from_peer, msg.flow_label, 0, 0, "not on attack path");
            return;
        }
        const std::size_t p = msg.attack_path.size();
        const int round = static_cast<int>(p - i);

        RequestOrigin origin{msg.requester, msg.attack_path};
        auto installed = filters_.install(msg.flow_label, now, params_.temp_filter_lifetime,
                                          origin, FilterKind::Temporary);
        if (installed.result == InstallResult::TableFull) {
            emit(env, EventKind::TableFull, from_peer, msg.flow_label);
            return;
        }
        if (installed.result == InstallResult::Refreshed) {
            emit(env, EventKind::FilterRefreshed, from_peer, msg.flow_label, round,
                 params_.temp_filter_lifetime);
            refresh_shadow(env, msg.flow_label, now, origin);
            if (auto w = escalation_watch_.find(installed.entry); w != escalation_watch_.end()) {
                w->second.check_at = now + params_.temp_filter_lifetime;
                env.arm_timer(id_, w->second.check_at, TimerKind::EscalationCheck, installed.entry);
            }
            return;  // duplicate: no re-propagation
        }

        emit(env, EventKind::FilterInstalled, msg.requester, msg.flow_label, round,
             params_.temp_filter_lifetime, "temp");
        refresh_shadow(env, msg.flow_label, now, origin);

        EscalationWatch watch;
        watch.label = msg.flow_label;
        watch.origin = origin;
        watch.round = round;
        watch.check_at = now + params_.temp_filter_lifetime;
        watch.filter_entry = installed.entry;
        escalation_watch_[installed.entry] = watch;
        env.arm_timer(id_, watch.check_at, TimerKind::EscalationCheck, installed.entry);

        // Counterpart for this round: k-th AITF node from the attacker end.
        const std::size_t cp = p - 1 - i;
        if (cp < i) {
            AitfMessage fwd;
            fwd.kind = MsgKind::FilterReq;
            fwd.req_type = ReqType::ToAttackerGw;
            fwd.flow_label = msg.flow_label;
            fwd.attack_path = msg.attack_path;
            fwd.requester = id_;
            ++counters_.requests_sent;
            emit(env, EventKind::RequestSent, msg.attack_path[cp], msg.flow_label, round, 0,
                 "to_attacker_gw");
            env.send_message(id_, msg.attack_path[cp], fwd);
        } else if (cp == i) {
            // Degenerate single-gateway path: act as the attacker's gateway too.
            begin_handshake(env, msg.flow_label, id_, msg.attack_path);
        }
    }

    void refresh_shadow(NodeServices& env, const FlowLabel& label, SimTime now, RequestOrigin origin) {
        auto r = shadow_.log(label, now, params_.filter_lifetime, std::move(origin));
        switch (r) {
            case ShadowLog::LogResult::Ok: emit(env, EventKind::ShadowLogged, kNoNode, label); break;
            case ShadowLog::LogResult::Refreshed: emit(env, EventKind::ShadowRefreshed, kNoNode, label); break;
            case ShadowLog::LogResult::Overflow: emit(env, EventKind::ShadowOverflow, kNoNode, label); break;
        }
    }

    void reinstall_temp(NodeServices& env, const FlowLabel& label, const RequestOrigin& origin) {
        const SimTime now = env.now();
        auto installed =
            filters_.install(label, now, params_.temp_filter_lifetime, origin, FilterKind::Temporary);
        if (installed.result == InstallResult::TableFull) {
            emit(env, EventKind::TableFull, kNoNode, label);
            return;
        }
        refresh_shadow(env, label, now, origin);
        const std::size_t i = path_index(origin.attack_path);
        const int round =
            i == npos ? 1 : static_cast<int>(origin.attack_path.size() - i);
        emit(env, EventKind::FilterInstalled, origin.requester, label, round,
             params_.temp_filter_lifetime, "temp-reinstall");
        EscalationWatch watch;
        watch.label = label;
        watch.origin = origin;
        watch.round = round;
        watch.check_at = now + params_.temp_filter_lifetime;
        watch.last_drop = now;
        watch.filter_entry = installed.entry;
        escalation_watch_[installed.entry] = watch;
        env.arm_timer(id_, watch.check_at, TimerKind::EscalationCheck, installed.entry);
    }

    // Fires at temp-filter expiry: judge whether the attacker side took over.
    void escalation_check(NodeServices& env, std::uint32_t entry_id) {
        auto it = escalation_watch_.find(entry_id);
        if (it == escalation_watch_.end()) return;
        EscalationWatch& w = it->second;
        const SimTime now = env.now();
        if (now < w.check_at) return;  // stale timer; a fresher one is armed

        const bool still_arriving =
            w.last_drop != kNever && w.last_drop >= w.check_at - params_.grace_victim_gw;

        if (!still_arriving) {
            // Quiet near expiry: the attacker's gateway has taken over.
            filters_.erase(entry_id);
            emit(env, EventKind::FilterRemoved, kNoNode, w.label, w.round, 0, "quiet");
            escalation_watch_.erase(it);
            return;
        }

        // Flow still arriving: renew the temp filter and move one round up.
        FlowLabel label = w.label;
        RequestOrigin origin = w.origin;
        int round = w.round;
        escalation_watch_.erase(it);
        auto installed =
            filters_.install(label, now, params_.temp_filter_lifetime, origin, FilterKind::Temporary);
        if (installed.result != InstallResult::TableFull) {
            EscalationWatch watch;
            watch.label = label;
            watch.origin = origin;
            watch.round = round;
            watch.check_at = now + params_.temp_filter_lifetime;
            watch.filter_entry = installed.entry;
            escalation_watch_[installed.entry] = watch;
            env.arm_timer(id_, watch.check_at, TimerKind::EscalationCheck, installed.entry);
        }
        escalate_one_round(env, label, origin);
    }

    // Send the filtering request one AITF node up the victim side, or, if
    // this router is the last victim-side node, cut the peering edge.
    void escalate_one_round(NodeServices& env, const FlowLabel& label, const RequestOrigin& origin) {
        const std::vector<NodeId>& path = origin.attack_path;
        const std::size_t p = path.size();
        const std::size_t i = path_index(path);
        if (i == npos || p == 0) return;

        if (2 * i > p) {
            const NodeId upstream = path[i - 1];
            AitfMessage req;
            req.kind = MsgKind::FilterReq;
            req.req_type = ReqType::ToVictimGw;
            req.flow_label = label;
            req.attack_path = path;
            req.requester = id_;
            ++counters_.requests_sent;
            const int next_round = static_cast<int>(p - i) + 1;
            emit(env, EventKind::Escalated, upstream, label, next_round);
            env.send_message(id_, upstream, req);
            return;
        }

        // No victim-side node left to ask: disconnect toward the attacker side.
        NodeId peer = kNoNode;
        if (i >= 1) {
            peer = path[i - 1];
        } else if (label.src.is_exact()) {
            peer = env.node_for_address(label.src.addr);
        }
        if (peer == kNoNode || !env.adjacent(id_, peer)) return;
        do_disconnect(env, peer, label);
    }

    void do_disconnect(NodeServices& env, NodeId peer, const FlowLabel& label) {
        const SimTime until = params_.disconnect_duration > 0
                                  ? env.now() + params_.disconnect_duration
                                  : kNever;
        emit(env, EventKind::Disconnected, peer, label);
        env.disconnect_edge(id_, peer, until);
    }

    // --- attacker's gateway role ----------------------------------------

    void handle_as_attacker_gw(NodeServices& env, const AitfMessage& msg, NodeId from_peer) {
        if (!cooperative_) {
            emit(env, EventKind::RequestIgnored, from_peer, msg.flow_label);
            return;
        }
        // Dedup: a live long-term filter already blocks this label.
        if (find_long_term_equal(msg.flow_label, env.now())) return;
        for (const auto& [nonce, hs] : pending_)
            if (hs.requester == msg.requester && flow_label_equal(hs.label, msg.flow_label))
                return;  // handshake already in flight
        begin_handshake(env, msg.flow_label, msg.requester, msg.attack_path);
    }

    bool find_long_term_equal(const FlowLabel& label, SimTime now) const {
        bool found = false;
        filters_.for_each([&](const FilterEntry& e) {
            if (!found && e.kind == FilterKind::LongTerm && e.expires_at > now &&
                flow_label_equal(e.label, label))
                found = true;
        });
        return found;
    }

    void begin_handshake(NodeServices& env, const FlowLabel& label, NodeId requester,
                         const std::vector<NodeId>& attack_path) {
        const NodeId victim = env.node_for_address(label.dst);
        if (victim == kNoNode) {
            emit(env, EventKind::RequestDiscarded, kNoNode, label, 0, 0, "unknown destination");
            return;
        }
        std::uint64_t nonce = rng_();
        while (pending_.count(nonce)) nonce = rng_();
        pending_[nonce] = PendingHandshake{label, requester, attack_path, env.now(), kNoNode};
        ++counters_.handshakes_started;

        AitfMessage query;
        query.kind = MsgKind::VerifyQuery;
        query.flow_label = label;
        query.nonce = nonce;
        query.requester = id_;
        emit(env, EventKind::VerifyQuerySent, victim, label);
        env.send_message(id_, victim, query);
        env.arm_timer(id_, env.now() + params_.handshake_timeout, TimerKind::HandshakeTimeout, nonce);
    }

    void handshake_timeout(NodeServices& env, std::uint64_t nonce) {
        auto it = pending_.find(nonce);
        if (it == pending_.end()) return;
        ++counters_.handshake_timeouts;
        emit(env, EventKind::HandshakeTimeout, kNoNode, it->second.label);
        pending_.erase(it);
    }

    void handle_verify_reply(NodeServices& env, const AitfMessage& msg) {
        auto it = pending_.find(msg.nonce);
        if (it == pending_.end() || !flow_label_equal(it->second.label, msg.flow_label)) {
            ++counters_.nonce_mismatches;
            emit(env, EventKind::NonceMismatch, msg.requester, msg.flow_label);
            return;
        }
        PendingHandshake hs = std::move(it->second);
        pending_.erase(it);
        ++counters_.handshakes_completed;
        emit(env, EventKind::HandshakeOk, msg.requester, hs.label);

        const SimTime now = env.now();
        const std::size_t i = path_index(hs.attack_path);
        const std::size_t p = hs.attack_path.size();
        const int round = i == npos ? 1 : static_cast<int>(i) + 1;

        // The round-k attacker: one step further toward the flow's origin.
        NodeId target = kNoNode;
        if (i != npos && i >= 1) {
            target = hs.attack_path[i - 1];
        } else if (hs.label.src.is_exact()) {
            target = env.node_for_address(hs.label.src.addr);
        }
        if (target != kNoNode && !env.adjacent(id_, target)) target = kNoNode;

        // The propagated request is policed by the client-side contract; the
        // long-term filter is tied to it, which is what bounds the per-client
        // filter count to R2*T.
        if (target != kNoNode && !police_outbound(env, target)) return;

        RequestOrigin origin{hs.requester, hs.attack_path};
        auto installed =
            filters_.install(hs.label, now, params_.filter_lifetime, origin, FilterKind::LongTerm, target);
        if (installed.result == InstallResult::TableFull) {
            emit(env, EventKind::TableFull, kNoNode, hs.label);
        } else if (installed.result == InstallResult::Ok) {
            emit(env, EventKind::FilterInstalled, target, hs.label, round,
                 params_.filter_lifetime, "long");
            if (target != kNoNode)
                grace_watch_[installed.entry] = GraceWatch{target, now + params_.grace_attacker};
        }

        if (target != kNoNode) {
            AitfMessage req;
            req.kind = MsgKind::FilterReq;
            req.req_type = ReqType::ToAttacker;
            req.flow_label = hs.label;
            req.attack_path = hs.attack_path;
            req.requester = id_;
            ++counters_.requests_sent;
            emit(env, EventKind::RequestSent, target, hs.label, round, 0, "to_attacker");
            env.send_adjacent(id_, target, req);
        }
    }

    // Matching traffic from the client edge after the grace deadline means
    // the attacker did not stop: disconnect her.
    void grace_tripwire(NodeServices& env, std::uint32_t entry_id, NodeId from_peer, SimTime now) {
        auto it = grace_watch_.find(entry_id);
        if (it == grace_watch_.end()) return;
        if (from_peer != it->second.peer || now <= it->second.deadline) return;
        const FilterEntry* e = filters_.get(entry_id);
        FlowLabel label = e ? e->label : FlowLabel{};
        NodeId peer = it->second.peer;
        grace_watch_.erase(it);
        do_disconnect(env, peer, label);
    }

    // --- attacker role (a router told to stop a flow it forwards) --------

    void handle_as_attacker_role(NodeServices& env, const AitfMessage& msg, NodeId from_peer) {
        if (!cooperative_) {
            emit(env, EventKind::RequestIgnored, from_peer, msg.flow_label);
            return;
        }
        const std::size_t i = path_index(msg.attack_path);
        NodeId client = kNoNode;
        if (i != npos && i >= 1)
            client = msg.attack_path[i - 1];
        else if (msg.flow_label.src.is_exact())
            client = env.node_for_address(msg.flow_label.src.addr);
        if (client != kNoNode && !env.adjacent(id_, client)) client = kNoNode;

        RequestOrigin origin{msg.requester, msg.attack_path};
        auto installed = filters_.install(msg.flow_label, env.now(), params_.filter_lifetime,
                                          origin, FilterKind::LongTerm, client);
        if (installed.result == InstallResult::Ok)
            emit(env, EventKind::FilterInstalled, client, msg.flow_label,
                 i == npos ? 0 : static_cast<int>(i) + 1, params_.filter_lifetime, "long");
        else if (installed.result == InstallResult::TableFull)
            emit(env, EventKind::TableFull, from_peer, msg.flow_label);
    }

    NodeId id_;
    ProtocolParams params_;
    bool cooperative_;
    FilterTable filters_;
    ShadowLog shadow_;
    std::mt19937_64 rng_;
    std::map<NodeId, EdgeState> edges_;
    std::map<std::uint64_t, PendingHandshake> pending_;
    std::unordered_map<std::uint32_t, EscalationWatch> escalation_watch_;
    std::unordered_map<std::uint32_t, GraceWatch> grace_watch_;
    RouterCounters counters_;
};

}  // namespace aitf
