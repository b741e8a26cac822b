/*
    Licensed under the Apache License, Version 2.0 (the "License");
    you may not use this file except in compliance with the License.
    You may obtain a copy of the License at

        https://www.apache.org/licenses/LICENSE-2.0

    Unless required by applicable law or agreed to in writing, software
    distributed under the License is distributed on an "AS IS" BASIS,
    WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
    See the License for the specific language governing permissions and
    limitations under the License.
*/
#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sapsky/object.hpp"

namespace sapsky {

/// Count-based sliding window over an object stream. Keeps the newest
/// `capacity` objects in arrival order; inserting into a full window evicts
/// the oldest. Order is (arrival_step, object_id) and must be strictly
/// increasing across inserts. Storage is contiguous so the dominance passes
/// can scan it as a span.
class SlidingWindow {
 public:
  explicit SlidingWindow(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0)
      throw std::invalid_argument("SlidingWindow: capacity must be positive");
    objects_.reserve(capacity);
  }

  /// Returns the evicted object, if any.
  std::optional<UncertainObject> insert(UncertainObject obj) {
    if (!objects_.empty()) {
      const UncertainObject& newest = objects_.back();
      const auto incoming = std::make_pair(obj.arrival_step(), obj.object_id());
      const auto last = std::make_pair(newest.arrival_step(), newest.object_id());
      if (incoming <= last)
        throw std::invalid_argument(
            "SlidingWindow: out-of-order insert, object " +
            std::to_string(obj.object_id()) + " at step " +
            std::to_string(obj.arrival_step()) + " after object " +
            std::to_string(newest.object_id()) + " at step " +
            std::to_string(newest.arrival_step()));
    }
    std::optional<UncertainObject> evicted;
    if (objects_.size() == capacity_) {
      evicted = std::move(objects_.front());
      objects_.erase(objects_.begin());
    }
    objects_.push_back(std::move(obj));
    return evicted;
  }

  /// Current contents, oldest first.
  std::span<const UncertainObject> active() const { return objects_; }

  std::size_t size() const { return objects_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool full() const { return objects_.size() == capacity_; }

 private:
  std::size_t capacity_;
  std::vector<UncertainObject> objects_;
};

}  // namespace sapsky
