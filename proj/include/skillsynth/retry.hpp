#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <thread>

#include "skillsynth/errors.hpp"

namespace skillsynth {

struct RetryPolicy {
    int retries = 2;
    std::chrono::milliseconds base_backoff{200};
};

/// Calls fn() up to 1 + policy.retries times with exponential backoff between
/// attempts. Only ProviderError is retried. Returns nullopt once exhausted and
/// stores the last message in `last_error` when given.
template <class Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn, std::string* last_error = nullptr)
    -> std::optional<decltype(fn())> {
    auto delay = policy.base_backoff;
    for (int attempt = 0;; ++attempt) {
        try {
            return fn();
        } catch (const ProviderError& e) {
            if (last_error) *last_error = e.what();
            if (attempt >= policy.retries) return std::nullopt;
        }
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
        delay *= 2;
    }
}

} // namespace skillsynth
