#pragma once

// The two per-router stores: the bounded wire-speed filter table and the
// shadow request log kept in DRAM for the full request lifetime.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <queue>
#include <unordered_map>
#include <vector>

#include "aitf/core.hpp"

namespace aitf {

// Where a filtering request came from: who asked, and the attack path its
// sample packet recorded. Carried on table entries so escalation and on-off
// re-detection can resume from stored state.
struct RequestOrigin {
    NodeId requester = kNoNode;
    std::vector<NodeId> attack_path;
};

namespace detail {

// Shared store machinery: id-addressed entries, an exact-(src,dst) index with
// a side list for prefix/wildcard sources, and a lazy expiry heap. Entries
// expire at expires_at inclusive: a packet arriving exactly then passes.
template <typename Entry>
class EntryStore {
public:
    static constexpr std::uint32_t kNoEntry = 0xffffffffu;

    std::uint32_t insert(Entry e) {
        e.id = next_id_++;
        std::uint32_t id = e.id;
        index_add(e);
        heap_.push({e.expires_at, id});
        entries_.emplace(id, std::move(e));
        if (entries_.size() > high_water_) high_water_ = entries_.size();
        return id;
    }

    Entry* get(std::uint32_t id) {
        auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }
    const Entry* get(std::uint32_t id) const {
        auto it = entries_.find(id);
        return it == entries_.end() ? nullptr : &it->second;
    }

    void refresh(std::uint32_t id, SimTime new_expiry) {
        if (Entry* e = get(id)) {
            if (new_expiry > e->expires_at) {
                e->expires_at = new_expiry;
                heap_.push({new_expiry, id});
            }
        }
    }

    std::optional<Entry> take(std::uint32_t id) {
        auto it = entries_.find(id);
        if (it == entries_.end()) return std::nullopt;
        Entry out = std::move(it->second);
        index_remove(out);
        entries_.erase(it);
        return out;
    }

    // Remove and hand back everything with expires_at <= now.
    std::vector<Entry> purge(SimTime now) {
        std::vector<Entry> removed;
        while (!heap_.empty() && heap_.top().first <= now) {
            auto [exp, id] = heap_.top();
            heap_.pop();
            Entry* e = get(id);
            if (!e || e->expires_at != exp) continue;  // stale heap record
            removed.push_back(*take(id));
        }
        return removed;
    }

    // Live entries whose label matches the header, in insertion order.
    std::vector<std::uint32_t> match_candidates(const PacketHeader& h, SimTime now) const {
        std::vector<std::uint32_t> out;
        auto consider = [&](std::uint32_t id) {
            const Entry* e = get(id);
            if (!e || e->expires_at <= now) return;
            if (flow_label_matches(e->label, h)) out.push_back(id);
        };
        auto bucket = exact_.find(key(h.src, h.dst));
        if (bucket != exact_.end())
            for (auto id : bucket->second) consider(id);
        for (auto id : general_) consider(id);
        std::sort(out.begin(), out.end());
        return out;
    }

    // Live entry equal to `label` (mutual subsumption) with the same requester.
    std::uint32_t find_duplicate(const FlowLabel& label, NodeId requester, SimTime now) const {
        auto scan = [&](const std::vector<std::uint32_t>& ids) -> std::uint32_t {
            for (auto id : ids) {
                const Entry* e = get(id);
                if (!e || e->expires_at <= now) continue;
                if (e->origin.requester == requester && flow_label_equal(e->label, label)) return id;
            }
            return kNoEntry;
        };
        if (label.src.is_exact()) {
            auto bucket = exact_.find(key(label.src.addr, label.dst));
            return bucket == exact_.end() ? kNoEntry : scan(bucket->second);
        }
        return scan(general_);
    }

    template <typename Fn>
    void for_each(Fn&& fn) const {
        std::map<std::uint32_t, const Entry*> ordered;  // deterministic iteration
        for (auto& [id, e] : entries_) ordered.emplace(id, &e);
        for (auto& [id, e] : ordered) fn(*e);
    }

    std::size_t size() const { return entries_.size(); }
    std::size_t high_water() const { return high_water_; }

private:
    static std::uint64_t key(Address src, Address dst) {
        return (std::uint64_t(src) << 32) | dst;
    }
    void index_add(const Entry& e) {
        if (e.label.src.is_exact())
            exact_[key(e.label.src.addr, e.label.dst)].push_back(e.id);
        else
            general_.push_back(e.id);
    }
    void index_remove(const Entry& e) {
        auto drop = [&](std::vector<std::uint32_t>& v) {
            v.erase(std::remove(v.begin(), v.end(), e.id), v.end());
        };
        if (e.label.src.is_exact()) {
            auto it = exact_.find(key(e.label.src.addr, e.label.dst));
            if (it != exact_.end()) {
                drop(it->second);
                if (it->second.empty()) exact_.erase(it);
            }
        } else {
            drop(general_);
        }
    }

    std::uint32_t next_id_ = 0;
    std::unordered_map<std::uint32_t, Entry> entries_;
    std::unordered_map<std::uint64_t, std::vector<std::uint32_t>> exact_;
    std::vector<std::uint32_t> general_;
    std::priority_queue<std::pair<SimTime, std::uint32_t>,
                        std::vector<std::pair<SimTime, std::uint32_t>>,
                        std::greater<>>
        heap_;
    std::size_t high_water_ = 0;
};

}  // namespace detail

enum class FilterKind { Temporary, LongTerm };

struct FilterEntry {
    std::uint32_t id = 0;
    FlowLabel label;
    SimTime installed_at = 0;
    SimTime expires_at = 0;
    RequestOrigin origin;
    std::optional<SimTime> last_matched_at;
    FilterKind kind = FilterKind::Temporary;
    NodeId client_peer = kNoNode;  // attacker-side edge this filter polices, if any
};

enum class InstallResult { Ok, Refreshed, TableFull };

// Wire-speed filter table with a hard capacity. No eviction: contracts are
// sized so compliant load never fills it, and overflow must stay visible.
class FilterTable {
public:
    explicit FilterTable(std::size_t capacity = 1024) : capacity_(capacity) {}

    struct Installed {
        InstallResult result;
        std::uint32_t entry = detail::EntryStore<FilterEntry>::kNoEntry;
    };

    Installed install(const FlowLabel& label, SimTime now, Duration lifetime,
                      RequestOrigin origin, FilterKind kind, NodeId client_peer = kNoNode) {
        purge(now);
        auto dup = store_.find_duplicate(label, origin.requester, now);
        if (dup != store_.kNoEntry) {
            store_.refresh(dup, now + lifetime);
            return {InstallResult::Refreshed, dup};
        }
        if (store_.size() >= capacity_) {
            ++table_full_count_;
            return {InstallResult::TableFull, store_.kNoEntry};
        }
        FilterEntry e;
        e.label = label;
        e.installed_at = now;
        e.expires_at = now + lifetime;
        e.origin = std::move(origin);
        e.kind = kind;
        e.client_peer = client_peer;
        auto id = store_.insert(std::move(e));
        if (client_peer != kNoNode) {
            auto live = ++peer_live_[client_peer];
            auto& hw = peer_high_water_[client_peer];
            if (live > hw) hw = live;
        }
        return {InstallResult::Ok, id};
    }

    // DROP iff some unexpired entry matches; marks the entry as hit.
    std::optional<std::uint32_t> match(const PacketHeader& h, SimTime now) {
        purge(now);
        auto ids = store_.match_candidates(h, now);
        if (ids.empty()) return std::nullopt;
        store_.get(ids.front())->last_matched_at = now;
        return ids.front();
    }

    // Side-effect-free lookup, for audits.
    bool would_match(const PacketHeader& h, SimTime now) const {
        return !store_.match_candidates(h, now).empty();
    }

    std::size_t expire(SimTime now) { return purge(now); }

    std::size_t purge(SimTime now) {
        auto removed = store_.purge(now);
        for (const auto& e : removed) on_removed(e);
        return removed.size();
    }

    FilterEntry* get(std::uint32_t id) { return store_.get(id); }
    const FilterEntry* get(std::uint32_t id) const { return store_.get(id); }

    void erase(std::uint32_t id) {
        if (auto e = store_.take(id)) on_removed(*e);
    }
    void refresh(std::uint32_t id, SimTime new_expiry) { store_.refresh(id, new_expiry); }

    std::size_t size() const { return store_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::size_t high_water() const { return store_.high_water(); }
    std::uint64_t table_full_count() const { return table_full_count_; }
    const std::map<NodeId, std::size_t>& peer_high_water() const { return peer_high_water_; }
    std::size_t peer_live(NodeId peer) const {
        auto it = peer_live_.find(peer);
        return it == peer_live_.end() ? 0 : it->second;
    }

    template <typename Fn>
    void for_each(Fn&& fn) const { store_.for_each(fn); }

private:
    void on_removed(const FilterEntry& e) {
        if (e.client_peer != kNoNode) {
            auto it = peer_live_.find(e.client_peer);
            if (it != peer_live_.end() && it->second > 0) --it->second;
        }
    }

    std::size_t capacity_;
    detail::EntryStore<FilterEntry> store_;
    std::uint64_t table_full_count_ = 0;
    std::map<NodeId, std::size_t> peer_live_;
    std::map<NodeId, std::size_t> peer_high_water_;
};

struct ShadowEntry {
    std::uint32_t id = 0;
    FlowLabel label;
    SimTime logged_at = 0;
    SimTime expires_at = 0;
    RequestOrigin origin;
};

// DRAM-resident memory of filtering requests, kept for the full request
// lifetime so on-off flows can be re-detected after the temp filter is gone.
class ShadowLog {
public:
    explicit ShadowLog(std::size_t capacity = 65536) : capacity_(capacity) {}

    enum class LogResult { Ok, Refreshed, Overflow };

    LogResult log(const FlowLabel& label, SimTime now, Duration retention, RequestOrigin origin) {
        store_.purge(now);
        auto dup = store_.find_duplicate(label, origin.requester, now);
        if (dup != store_.kNoEntry) {
            ShadowEntry* e = store_.get(dup);
            e->logged_at = now;
            e->origin = std::move(origin);
            store_.refresh(dup, now + retention);
            return LogResult::Refreshed;
        }
        if (store_.size() >= capacity_) {
            ++overflow_count_;
            return LogResult::Overflow;
        }
        ShadowEntry e;
        e.label = label;
        e.logged_at = now;
        e.expires_at = now + retention;
        e.origin = std::move(origin);
        store_.insert(std::move(e));
        return LogResult::Ok;
    }

    // Earliest-logged unexpired entry matching the header, if any.
    const ShadowEntry* lookup(const PacketHeader& h, SimTime now) {
        store_.purge(now);
        auto ids = store_.match_candidates(h, now);
        const ShadowEntry* best = nullptr;
        for (auto id : ids) {
            const ShadowEntry* e = store_.get(id);
            if (!best || e->logged_at < best->logged_at ||
                (e->logged_at == best->logged_at && e->id < best->id))
                best = e;
        }
        return best;
    }

    std::size_t expire(SimTime now) { return store_.purge(now).size(); }

    std::size_t size() const { return store_.size(); }
    std::size_t high_water() const { return store_.high_water(); }
    std::uint64_t overflow_count() const { return overflow_count_; }

private:
    std::size_t capacity_;
    detail::EntryStore<ShadowEntry> store_;
    std::uint64_t overflow_count_ = 0;
};

}  // namespace aitf
