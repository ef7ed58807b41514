#pragma once

#include "lumen/random.hpp"

#include <cstddef>
#include <vector>

namespace lumen::train {

/// History buffer of generated samples shown to a discriminator. While
/// filling, every query returns its input. Once full, a query returns a
/// uniformly drawn stored item with probability 1/2 (storing the new item in
/// its slot) and the new item otherwise.
template <typename Item>
class ImagePool {
 public:
  explicit ImagePool(std::size_t capacity = 50) : capacity_(capacity) {}

  Item query(const Item& item, RandomStream& rng) {
    if (capacity_ == 0) return item;
    if (items_.size() < capacity_) {
      items_.push_back(item);
      return item;
    }
    if (rng.uniform() < 0.5) {
      const auto slot = static_cast<std::size_t>(rng.below(capacity_));
      Item out = items_[slot];
      items_[slot] = item;
      return out;
    }
    return item;
  }

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  const std::vector<Item>& items() const { return items_; }
  std::vector<Item>& items() { return items_; }

 private:
  std::size_t capacity_;
  std::vector<Item> items_;
};

}  // namespace lumen::train
