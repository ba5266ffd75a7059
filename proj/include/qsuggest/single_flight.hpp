#pragma once

#include <exception>
#include <future>
#include <map>
#include <mutex>
#include <utility>

namespace qsuggest {

// Coalesces concurrent calls that share a key: the first caller runs the
// function, later callers arriving before it finishes wait for its result (or
// its exception). Nothing is retained once the call completes.
template <typename Key, typename Value>
class SingleFlight {
 public:
  template <typename Fn>
  Value run(const Key& key, Fn&& fn, bool* coalesced = nullptr) {
    std::unique_lock lock(mutex_);
    if (auto it = calls_.find(key); it != calls_.end()) {
      auto pending = it->second;
      lock.unlock();
      if (coalesced) *coalesced = true;
      return pending.get();
    }
    std::promise<Value> promise;
    calls_.emplace(key, promise.get_future().share());
    lock.unlock();
    if (coalesced) *coalesced = false;

    try {
      Value value = std::forward<Fn>(fn)();
      promise.set_value(value);
      forget(key);
      return value;
    } catch (...) {
      promise.set_exception(std::current_exception());
      forget(key);
      throw;
    }
  }

  std::size_t in_flight() const {
    std::lock_guard lock(mutex_);
    return calls_.size();
  }

 private:
  void forget(const Key& key) {
    std::lock_guard lock(mutex_);
    calls_.erase(key);
  }

  mutable std::mutex mutex_;
  std::map<Key, std::shared_future<Value>> calls_;
};

}  // namespace qsuggest
