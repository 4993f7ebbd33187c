#pragma once

// Deterministic discrete-event simulator: topology with per-direction link
// delays, shortest-path routing, a single virtual clock, and hop-by-hop
// delivery of data packets and protocol messages. Events execute in
// (fire_at, insertion-seq) order, so (scenario, seed) fully determines a run.

#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "aitf/contract.hpp"
#include "aitf/core.hpp"
#include "aitf/host.hpp"
#include "aitf/node.hpp"

namespace aitf {

struct TopoLink {
    NodeId a = kNoNode;
    NodeId b = kNoNode;
    Duration delay_ab = 1;
    Duration delay_ba = 1;
};

class Topology {
public:
    NodeId add_node(std::string name, bool is_router, Address address) {
        names_.push_back(std::move(name));
        is_router_.push_back(is_router);
        addresses_.push_back(address);
        by_name_[names_.back()] = static_cast<NodeId>(names_.size() - 1);
        by_address_[address] = static_cast<NodeId>(names_.size() - 1);
        return static_cast<NodeId>(names_.size() - 1);
    }

    void add_link(NodeId a, NodeId b, Duration delay_ab, Duration delay_ba) {
        if (a >= size() || b >= size() || a == b)
            throw std::invalid_argument("link endpoints invalid");
        if (delay_ab < 0 || delay_ba < 0)
            throw std::invalid_argument("link delay must be >= 0");
        links_.push_back({a, b, delay_ab, delay_ba});
    }

    // Next-hop tables: shortest path by one-way delay, ties broken toward the
    // lowest-numbered parent so routing stays deterministic.
    void build_routing() {
        const std::size_t n = size();
        adj_.assign(n, {});
        for (const auto& l : links_) {
            adj_[l.a].push_back({l.b, l.delay_ab});
            adj_[l.b].push_back({l.a, l.delay_ba});
        }
        for (auto& v : adj_)
            std::sort(v.begin(), v.end());

        next_hop_.assign(n, std::vector<NodeId>(n, kNoNode));
        for (NodeId s = 0; s < n; ++s) {
            std::vector<SimTime> dist(n, std::numeric_limits<SimTime>::max());
            std::vector<NodeId> parent(n, kNoNode);
            using Item = std::pair<SimTime, NodeId>;
            std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
            dist[s] = 0;
            pq.push({0, s});
            while (!pq.empty()) {
                auto [d, u] = pq.top();
                pq.pop();
                if (d != dist[u]) continue;
                for (auto [v, w] : adj_[u]) {
                    SimTime nd = d + w;
                    if (nd < dist[v] || (nd == dist[v] && parent[v] != kNoNode && u < parent[v])) {
                        dist[v] = nd;
                        parent[v] = u;
                        pq.push({nd, v});
                    }
                }
            }
            for (NodeId t = 0; t < n; ++t) {
                if (t == s || parent[t] == kNoNode) continue;
                NodeId hop = t;
                while (parent[hop] != s) hop = parent[hop];
                next_hop_[s][t] = hop;
            }
        }
    }

    std::size_t size() const { return names_.size(); }
    const std::string& name(NodeId id) const { return names_.at(id); }
    bool is_router(NodeId id) const { return is_router_.at(id); }
    Address address(NodeId id) const { return addresses_.at(id); }

    NodeId find(const std::string& name) const {
        auto it = by_name_.find(name);
        return it == by_name_.end() ? kNoNode : it->second;
    }
    NodeId node_for_address(Address a) const {
        auto it = by_address_.find(a);
        return it == by_address_.end() ? kNoNode : it->second;
    }

    NodeId next_hop(NodeId from, NodeId to) const {
        if (from >= size() || to >= size() || from == to) return kNoNode;
        return next_hop_[from][to];
    }

    bool adjacent(NodeId a, NodeId b) const {
        for (auto [v, w] : adj_.at(a))
            if (v == b) return true;
        return false;
    }

    Duration link_delay(NodeId from, NodeId to) const {
        for (auto [v, w] : adj_.at(from))
            if (v == to) return w;
        throw std::logic_error("link_delay: nodes not adjacent");
    }

    std::vector<NodeId> neighbors(NodeId n) const {
        std::vector<NodeId> out;
        for (auto [v, w] : adj_.at(n)) out.push_back(v);
        return out;
    }

    const std::vector<TopoLink>& links() const { return links_; }

private:
    std::vector<std::string> names_;
    std::vector<bool> is_router_;
    std::vector<Address> addresses_;
    std::vector<TopoLink> links_;
    std::vector<std::vector<std::pair<NodeId, Duration>>> adj_;
    std::vector<std::vector<NodeId>> next_hop_;
    std::unordered_map<std::string, NodeId> by_name_;
    std::unordered_map<Address, NodeId> by_address_;
};

// Per-flow tallies; the harness turns these into the metrics report.
struct FlowTotals {
    std::uint64_t emitted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t dropped_filter = 0;
    std::uint64_t dropped_disconnected = 0;
    std::uint64_t dropped_noroute = 0;
    std::int64_t in_flight = 0;
    std::uint64_t emitted_bytes = 0;
    std::uint64_t delivered_bytes = 0;
    SimTime first_delivery = kNever;
    SimTime last_delivery = kNever;
    std::vector<SimTime> delivery_times;  // kept only when requested
    // Binned by measurement window from flow start.
    std::vector<std::uint64_t> offered_bins;
    std::vector<std::uint64_t> delivered_bins;
    std::vector<std::uint64_t> offered_bytes_bins;
    std::vector<std::uint64_t> delivered_bytes_bins;
};

struct DisconnectRecord {
    NodeId node = kNoNode;
    NodeId peer = kNoNode;
    SimTime at = 0;
};

class Simulator final : public NodeServices {
public:
    Simulator(Topology topo, std::uint64_t seed, Duration measure_window)
        : topo_(std::move(topo)), master_rng_(seed), measure_window_(measure_window) {
        routers_.resize(topo_.size());
        hosts_.resize(topo_.size());
    }

    Topology& topology() { return topo_; }
    const Topology& topology() const { return topo_; }

    // ------------------------------------------------------------------
    // Construction
    // ------------------------------------------------------------------

    BorderRouter& add_router(NodeId id, const ProtocolParams& params, std::size_t filter_capacity,
                             std::size_t shadow_capacity, bool cooperative) {
        routers_[id] = std::make_unique<BorderRouter>(id, params, filter_capacity, shadow_capacity,
                                                      master_rng_(), cooperative);
        return *routers_[id];
    }

    EndHost& add_host(NodeId id, const ProtocolParams& params) {
        NodeId gw = kNoNode;
        auto nbrs = topo_.neighbors(id);
        if (!nbrs.empty()) gw = nbrs.front();
        hosts_[id] = std::make_unique<EndHost>(id, topo_.address(id), gw, params, master_rng_());
        return *hosts_[id];
    }

    void apply_contract(const FilteringContract& c) {
        if (routers_[c.b]) routers_[c.b]->set_edge_rates(c.a, c.a_to_b, c.b_to_a);
        if (routers_[c.a]) routers_[c.a]->set_edge_rates(c.b, c.b_to_a, c.a_to_b);
    }

    std::int32_t add_flow(NodeId src, const PacketHeader& header, std::uint32_t size_bytes,
                          double rate_pps, SimTime start, SenderBehavior behavior, Duration on_ms,
                          Duration off_ms) {
        if (!hosts_[src]) throw std::logic_error("flow source is not a host");
        auto id = static_cast<std::int32_t>(flows_.size());
        FlowInfo info;
        info.src = src;
        info.header = header;
        info.start = start;
        flows_.push_back(info);
        totals_.emplace_back();
        HostFlow hf;
        hf.flow_id = id;
        hf.header = header;
        hf.size_bytes = size_bytes;
        hf.rate_pps = rate_pps;
        hf.start = start;
        hf.behavior = behavior;
        hf.on_ms = on_ms;
        hf.off_ms = off_ms;
        hosts_[src]->add_flow(hf);
        schedule(start, FlowTickEv{id, 0});
        return id;
    }

    void add_classifier(NodeId victim, const FlowLabel& label, Duration t_d) {
        if (!hosts_[victim]) throw std::logic_error("classifier victim is not a host");
        hosts_[victim]->add_classifier({label, t_d});
    }

    void set_spoofer(NodeId host, SpoofSpec spec) {
        if (!hosts_[host]) throw std::logic_error("spoofer node is not a host");
        SimTime start = spec.start;
        hosts_[host]->set_spoofer(std::move(spec));
        schedule(start, TimerEv{host, TimerKind::SpoofTick, 0});
    }

    void set_audit_forwarding(bool on) { audit_ = on; }
    void set_filter_bound(NodeId node, std::size_t bound) { filter_bounds_[node] = bound; }
    void set_keep_delivery_times(std::int32_t flow) { keep_delivery_times_.insert(flow); }
    void set_trace_packets(bool on) { trace_packets_ = on; }

    // ------------------------------------------------------------------
    // Event loop
    // ------------------------------------------------------------------

    std::size_t run_until(SimTime t_end) {
        std::size_t n = 0;
        while (!queue_.empty() && queue_.top().at <= t_end) {
            Event ev = queue_.top();
            queue_.pop();
            if (ev.at < clock_) throw std::logic_error("virtual clock went backward");
            clock_ = ev.at;
            dispatch(ev);
            ++n;
        }
        if (t_end > clock_) clock_ = t_end;
        return n;
    }

    // ------------------------------------------------------------------
    // NodeServices
    // ------------------------------------------------------------------

    SimTime now() const override { return clock_; }

    void send_message(NodeId from, NodeId to, const AitfMessage& msg) override {
        if (from == to) return;
        forward_message(from, from, to, msg);
    }

    void send_adjacent(NodeId from, NodeId peer, const AitfMessage& msg) override {
        if (!topo_.adjacent(from, peer)) {
            ++messages_dropped_noroute_;
            return;
        }
        if (edge_disconnected(from, peer)) {
            ++messages_dropped_disconnected_;
            return;
        }
        schedule(clock_ + topo_.link_delay(from, peer), DeliverMsgEv{msg, peer, from, peer});
    }

    void arm_timer(NodeId node, SimTime fire_at, TimerKind kind, std::uint64_t key) override {
        schedule(fire_at, TimerEv{node, kind, key});
    }

    bool routes_toward(NodeId router, Address dst, NodeId via_peer) const override {
        NodeId dst_node = topo_.node_for_address(dst);
        if (dst_node == kNoNode || dst_node == router) return false;
        return topo_.next_hop(router, dst_node) == via_peer;
    }

    NodeId node_for_address(Address a) const override { return topo_.node_for_address(a); }

    bool adjacent(NodeId a, NodeId b) const override { return topo_.adjacent(a, b); }

    void disconnect_edge(NodeId a, NodeId b, SimTime until) override {
        disconnected_[edge_key(a, b)] =
            until == kNever ? std::numeric_limits<SimTime>::max() : until;
        disconnections_.push_back({a, b, clock_});
    }

    bool edge_disconnected(NodeId a, NodeId b) const {
        auto it = disconnected_.find(edge_key(a, b));
        return it != disconnected_.end() && it->second > clock_;
    }

    void emit(const ProtoEvent& ev) override {
        events_.push_back(ev);
        trace_.push_back(render_event(ev));
        if (ev.kind == EventKind::FilterInstalled) {
            auto it = filter_bounds_.find(ev.node);
            if (it != filter_bounds_.end() && routers_[ev.node] &&
                routers_[ev.node]->filters().size() > it->second) {
                std::ostringstream os;
                os << "filter bound exceeded at " << topo_.name(ev.node) << ": "
                   << routers_[ev.node]->filters().size() << " > " << it->second;
                violations_.push_back(os.str());
            }
        }
    }

    // ------------------------------------------------------------------
    // Results
    // ------------------------------------------------------------------

    const std::vector<ProtoEvent>& proto_events() const { return events_; }
    const std::vector<DisconnectRecord>& disconnections() const { return disconnections_; }
    const std::vector<std::string>& trace() const { return trace_; }
    const std::vector<std::string>& invariant_violations() const { return violations_; }
    const FlowTotals& flow_totals(std::int32_t flow) const { return totals_.at(flow); }
    std::size_t flow_count() const { return flows_.size(); }
    const BorderRouter* router(NodeId id) const { return routers_[id].get(); }
    BorderRouter* router(NodeId id) { return routers_[id].get(); }
    const EndHost* host(NodeId id) const { return hosts_[id].get(); }
    EndHost* host(NodeId id) { return hosts_[id].get(); }
    std::uint64_t messages_dropped_noroute() const { return messages_dropped_noroute_; }
    std::uint64_t messages_dropped_disconnected() const { return messages_dropped_disconnected_; }
    std::uint64_t forged_transit_dropped() const { return forged_transit_dropped_; }

    void check_conservation() {
        for (std::size_t f = 0; f < flows_.size(); ++f) {
            const FlowTotals& t = totals_[f];
            const auto accounted = t.delivered + t.dropped_filter + t.dropped_disconnected +
                                   t.dropped_noroute + static_cast<std::uint64_t>(t.in_flight);
            if (t.emitted != accounted) {
                std::ostringstream os;
                os << "conservation violated for flow " << f << ": emitted " << t.emitted
                   << " != accounted " << accounted;
                violations_.push_back(os.str());
            }
        }
    }

private:
    struct FlowInfo {
        NodeId src = kNoNode;
        PacketHeader header;
        SimTime start = 0;
    };

    struct DeliverPktEv {
        DataPacket pkt;
        NodeId at;
        NodeId from;
    };
    struct DeliverMsgEv {
        AitfMessage msg;
        NodeId at;
        NodeId from;
        NodeId dst;
    };
    struct TimerEv {
        NodeId node;
        TimerKind kind;
        std::uint64_t key;
    };
    struct FlowTickEv {
        std::int32_t flow;
        std::uint64_t k;
    };
    using Payload = std::variant<DeliverPktEv, DeliverMsgEv, TimerEv, FlowTickEv>;

    struct Event {
        SimTime at;
        std::uint64_t seq;
        Payload payload;
    };
    struct EventOrder {
        bool operator()(const Event& l, const Event& r) const {
            return std::tie(l.at, l.seq) > std::tie(r.at, r.seq);
        }
    };

    static std::uint64_t edge_key(NodeId a, NodeId b) {
        NodeId lo = a < b ? a : b, hi = a < b ? b : a;
        return (std::uint64_t(lo) << 32) | hi;
    }

    void schedule(SimTime at, Payload payload) {
        if (at < clock_) throw std::logic_error("event scheduled in the past");
        queue_.push({at, seq_++, std::move(payload)});
    }

    void dispatch(const Event& ev) {
        std::visit([&](const auto& p) { handle(p); }, ev.payload);
    }

    // --- flow emission ---------------------------------------------------

    void handle(const FlowTickEv& ev) {
        const FlowInfo& info = flows_[ev.flow];
        EndHost* h = hosts_[info.src].get();
        if (!h) return;
        auto result = h->on_flow_tick(*this, ev.flow, ev.k);
        if (result.packet) {
            FlowTotals& t = totals_[ev.flow];
            ++t.emitted;
            t.emitted_bytes += result.packet->size_bytes;
            bump_bin(t.offered_bins, t.offered_bytes_bins, info.start, result.packet->size_bytes);
            if (trace_packets_) trace_packet("emit", *result.packet, info.src);
            route_packet(std::move(*result.packet), info.src);
        }
        if (result.next_tick)
            schedule(*result.next_tick, FlowTickEv{ev.flow, result.next_k});
    }

    void bump_bin(std::vector<std::uint64_t>& pkts, std::vector<std::uint64_t>& bytes,
                  SimTime flow_start, std::uint32_t size) {
        const auto bin = static_cast<std::size_t>((clock_ - flow_start) / measure_window_);
        if (pkts.size() <= bin) {
            pkts.resize(bin + 1, 0);
            bytes.resize(bin + 1, 0);
        }
        pkts[bin] += 1;
        bytes[bin] += size;
    }

    void route_packet(DataPacket pkt, NodeId at) {
        FlowTotals& t = totals_[pkt.flow];
        NodeId dst_node = topo_.node_for_address(pkt.header.dst);
        if (dst_node == kNoNode) {
            ++t.dropped_noroute;
            return;
        }
        NodeId nh = topo_.next_hop(at, dst_node);
        if (nh == kNoNode) {
            ++t.dropped_noroute;
            return;
        }
        if (edge_disconnected(at, nh)) {
            ++t.dropped_disconnected;
            if (trace_packets_) trace_packet("drop_disconnected", pkt, at);
            return;
        }
        ++t.in_flight;
        const Duration d = topo_.link_delay(at, nh);
        schedule(clock_ + d, DeliverPktEv{std::move(pkt), nh, at});
    }

    void handle(const DeliverPktEv& ev) {
        DataPacket pkt = ev.pkt;
        FlowTotals& t = totals_[pkt.flow];
        --t.in_flight;
        if (edge_disconnected(ev.from, ev.at)) {  // cut while in flight
            ++t.dropped_disconnected;
            return;
        }
        if (topo_.is_router(ev.at)) {
            BorderRouter* r = routers_[ev.at].get();
            if (!r) {
                ++t.dropped_noroute;
                return;
            }
            PacketVerdict v = r->on_data_packet(*this, pkt, ev.from);
            if (v == PacketVerdict::DropFilter) {
                ++t.dropped_filter;
                if (trace_packets_) trace_packet("drop_filter", pkt, ev.at);
                return;
            }
            if (audit_ && r->filters().would_match(pkt.header, clock_)) {
                std::ostringstream os;
                os << "audit: packet matching a live filter forwarded at " << topo_.name(ev.at)
                   << " t=" << clock_;
                violations_.push_back(os.str());
            }
            if (trace_packets_) trace_packet("forward", pkt, ev.at);
            route_packet(std::move(pkt), ev.at);
            return;
        }
        // Host endpoint.
        EndHost* h = hosts_[ev.at].get();
        if (!h || pkt.header.dst != topo_.address(ev.at)) {
            ++t.dropped_noroute;
            return;
        }
        ++t.delivered;
        t.delivered_bytes += pkt.size_bytes;
        bump_bin(t.delivered_bins, t.delivered_bytes_bins, flows_[pkt.flow].start, pkt.size_bytes);
        if (t.first_delivery == kNever) t.first_delivery = clock_;
        t.last_delivery = clock_;
        if (keep_delivery_times_.count(pkt.flow)) t.delivery_times.push_back(clock_);
        if (trace_packets_) trace_packet("deliver", pkt, ev.at);
        h->on_packet_delivered(*this, pkt);
    }

    // --- message transit --------------------------------------------------

    void forward_message(NodeId sender, NodeId at, NodeId dst, const AitfMessage& msg) {
        NodeId nh = topo_.next_hop(at, dst);
        if (nh == kNoNode) {
            ++messages_dropped_noroute_;
            return;
        }
        if (edge_disconnected(at, nh)) {
            ++messages_dropped_disconnected_;
            return;
        }
        schedule(clock_ + topo_.link_delay(at, nh), DeliverMsgEv{msg, nh, at, dst});
        (void)sender;
    }

    void handle(const DeliverMsgEv& ev) {
        if (edge_disconnected(ev.from, ev.at)) {
            ++messages_dropped_disconnected_;
            return;
        }
        if (ev.at == ev.dst) {
            if (routers_[ev.at])
                routers_[ev.at]->on_message(*this, ev.msg, ev.from);
            else if (hosts_[ev.at])
                hosts_[ev.at]->on_message(*this, ev.msg, ev.from);
            return;
        }
        // Transit.
        if (!topo_.is_router(ev.at)) {
            ++messages_dropped_noroute_;
            return;
        }
        // Requests to an attacker are strictly gateway-to-client: a transit
        // copy was forged by someone who is not the attacker's gateway.
        if (ev.msg.kind == MsgKind::FilterReq && ev.msg.req_type == ReqType::ToAttacker) {
            ++forged_transit_dropped_;
            return;
        }
        forward_message(ev.from, ev.at, ev.dst, ev.msg);
    }

    void handle(const TimerEv& ev) {
        if (routers_[ev.node])
            routers_[ev.node]->on_timer(*this, ev.kind, ev.key);
        else if (hosts_[ev.node])
            hosts_[ev.node]->on_timer(*this, ev.kind, ev.key);
    }

    // --- tracing ----------------------------------------------------------

    std::string node_name(NodeId id) const { return id == kNoNode ? "-" : topo_.name(id); }

    std::string render_event(const ProtoEvent& ev) const {
        std::ostringstream os;
        os << "t=" << ev.t << " node=" << node_name(ev.node) << " " << to_string(ev.kind);
        if (ev.has_label) os << " label=" << format_flow_label(ev.label);
        if (ev.other != kNoNode) os << " other=" << node_name(ev.other);
        if (ev.round > 0) os << " round=" << ev.round;
        if (ev.lifetime > 0) os << " lifetime=" << ev.lifetime;
        if (!ev.note.empty()) os << " note=" << ev.note;
        return os.str();
    }

    void trace_packet(const char* what, const DataPacket& pkt, NodeId at) {
        std::ostringstream os;
        os << "t=" << clock_ << " node=" << node_name(at) << " pkt_" << what << " flow=" << pkt.flow
           << " src=" << format_address(pkt.header.src) << " dst=" << format_address(pkt.header.dst);
        trace_.push_back(os.str());
    }

    Topology topo_;
    std::mt19937_64 master_rng_;
    Duration measure_window_;
    SimTime clock_ = 0;
    std::uint64_t seq_ = 0;
    std::priority_queue<Event, std::vector<Event>, EventOrder> queue_;

    std::vector<std::unique_ptr<BorderRouter>> routers_;
    std::vector<std::unique_ptr<EndHost>> hosts_;
    std::vector<FlowInfo> flows_;
    std::vector<FlowTotals> totals_;

    std::map<std::uint64_t, SimTime> disconnected_;
    std::vector<DisconnectRecord> disconnections_;
    std::vector<ProtoEvent> events_;
    std::vector<std::string> trace_;
    std::vector<std::string> violations_;
    std::map<NodeId, std::size_t> filter_bounds_;
    std::set<std::int32_t> keep_delivery_times_;
    bool audit_ = true;
    bool trace_packets_ = false;

    std::uint64_t messages_dropped_noroute_ = 0;
    std::uint64_t messages_dropped_disconnected_ = 0;
    std::uint64_t forged_transit_dropped_ = 0;
};

}  // namespace aitf
