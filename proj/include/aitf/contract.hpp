#pragma once

// Filtering contracts between adjacent AITF parties and token-bucket policing
// of the filtering requests that cross each contract edge.

#include <algorithm>
#include <stdexcept>

#include "aitf/core.hpp"

namespace aitf {

// One direction of a contract edge: how many requests per second the
// receiving side accepts, and how large a burst it tolerates.
struct RequestRate {
    double rate_per_sec = 100.0;
    double burst = 100.0;   // defaults to one second's worth of tokens

    void validate() const {
        if (rate_per_sec <= 0 || burst <= 0)
            throw std::invalid_argument("contract: rates and bursts must be positive");
    }
};

// Per-adjacency request-rate agreement. `a` is the client side by convention,
// so a_to_b carries R1 (client->provider) and b_to_a carries R2.
struct FilteringContract {
    NodeId a = kNoNode;
    NodeId b = kNoNode;
    RequestRate a_to_b;   // accepted by b
    RequestRate b_to_a;   // accepted by a
};

enum class PoliceResult { Accept, Drop };

// Owned by exactly one simulated node; mutated only from the event loop.
struct PolicerState {
    double tokens = 0.0;
    SimTime last_refill = 0;
    bool primed = false;   // bucket starts full on first use

    // Refill at `rate` up to `burst`; admit one request if a whole token is
    // available. Deterministic given the arrival sequence.
    PoliceResult police(const RequestRate& r, SimTime now) {
        if (!primed) {
            tokens = r.burst;
            last_refill = now;
            primed = true;
        }
        if (now > last_refill) {
            tokens = std::min(r.burst, tokens + r.rate_per_sec * double(now - last_refill) / 1000.0);
            last_refill = now;
        }
        if (tokens >= 1.0) {
            tokens -= 1.0;
            return PoliceResult::Accept;
        }
        return PoliceResult::Drop;
    }
};

}  // namespace aitf
