#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <mutex>
#include <thread>

#include "vhm/errors.hpp"

namespace vhm {

/// Bounded exponential backoff. Only RetriableError triggers another attempt.
struct RetryPolicy {
    int max_attempts = 4;
    std::chrono::milliseconds initial_backoff{250};
    double multiplier = 2.0;
    std::chrono::milliseconds max_backoff{8000};
    /// Injectable for tests.
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };

    std::chrono::milliseconds backoff_for(int attempt) const {
        double ms = static_cast<double>(initial_backoff.count());
        for (int i = 0; i < attempt; ++i) ms *= multiplier;
        ms = std::min(ms, static_cast<double>(max_backoff.count()));
        return std::chrono::milliseconds(static_cast<long long>(ms));
    }
};

template <typename F>
auto with_retry(const RetryPolicy& policy, F&& attempt_fn) -> decltype(attempt_fn()) {
    const int attempts = std::max(1, policy.max_attempts);
    for (int attempt = 0;; ++attempt) {
        try {
            return attempt_fn();
        } catch (const RetriableError&) {
            if (attempt + 1 >= attempts) throw;
            policy.sleep(policy.backoff_for(attempt));
        }
    }
}

/// Spaces request starts at least 1/rate seconds apart. rate <= 0 disables it.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second = 0.0) : rate_(requests_per_second) {}

    void acquire() {
        if (rate_ <= 0.0) return;
        const auto interval = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / rate_));
        std::chrono::steady_clock::time_point slot;
        {
            std::lock_guard lock(mutex_);
            slot = std::max(std::chrono::steady_clock::now(), next_);
            next_ = slot + interval;
        }
        std::this_thread::sleep_until(slot);
    }

private:
    double rate_;
    std::mutex mutex_;
    std::chrono::steady_clock::time_point next_{};
};

}  // namespace vhm
