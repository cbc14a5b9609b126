#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fedint/model.hpp"

namespace fedint::wire {

enum class MessageType : std::uint8_t {
  TrainTask = 0x01,
  LocalModel = 0x02,
  EvalTask = 0x03,
  Metrics = 0x04,
};

std::string_view to_string(MessageType type);

struct Message {
  MessageType type = MessageType::TrainTask;
  std::uint64_t round = 0;
  std::string learner;
  std::vector<model::Tensor> tensors;

  const model::Tensor* find(std::string_view name) const;
  bool operator==(const Message&) const = default;
};

/// Frame layout, all integers little-endian:
///   u32 body_length | u8 tag | u64 round | u16 id_len id
///   u32 tensor_count { u16 name_len name u8 ndim u32 dim... }   (name table)
///   f64 values...                                               (payload)
std::vector<std::uint8_t> encode(const Message& message);

/// Throws Error(ProtocolError) on truncation, an unknown tag, a shape that
/// disagrees with the payload, or trailing bytes.
Message decode(const std::vector<std::uint8_t>& frame);

/// Unbounded FIFO between threads; preserves send order.
template <typename T>
class Channel {
 public:
  void send(T item) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(item));
    }
    cv_.notify_one();
  }

  T receive() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return !queue_.empty(); });
    T item = std::move(queue_.front());
    queue_.pop_front();
    return item;
  }

 private:
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<T> queue_;
};

}  // namespace fedint::wire
