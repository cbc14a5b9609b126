#include "fedint/wire.hpp"

#include <bit>
#include <limits>

#include "fedint/error.hpp"

namespace fedint::wire {

std::string_view to_string(MessageType type) {
  switch (type) {
    case MessageType::TrainTask: return "train_task";
    case MessageType::LocalModel: return "local_model";
    case MessageType::EvalTask: return "eval_task";
    case MessageType::Metrics: return "metrics";
  }
  return "?";
}

const model::Tensor* Message::find(std::string_view name) const {
  for (const auto& t : tensors)
    if (t.name == name) return &t;
  return nullptr;
}

namespace {

template <typename U>
void put(std::vector<std::uint8_t>& out, U v) {
  for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_string(std::vector<std::uint8_t>& out, const std::string& s) {
  if (s.size() > std::numeric_limits<std::uint16_t>::max())
    throw Error(ErrorCode::ProtocolError, "string too long for frame");
  put<std::uint16_t>(out, static_cast<std::uint16_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  template <typename U>
  U get() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(U(bytes_[pos_ + i]) << (8 * i));
    pos_ += sizeof(U);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint16_t>();
    need(n);
    std::string s(bytes_.begin() + static_cast<std::ptrdiff_t>(pos_),
                  bytes_.begin() + static_cast<std::ptrdiff_t>(pos_ + n));
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw Error(ErrorCode::ProtocolError, "truncated frame");
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode(const Message& message) {
  std::vector<std::uint8_t> body;
  body.push_back(static_cast<std::uint8_t>(message.type));
  put<std::uint64_t>(body, message.round);
  put_string(body, message.learner);
  put<std::uint32_t>(body, static_cast<std::uint32_t>(message.tensors.size()));
  for (const auto& t : message.tensors) {
    put_string(body, t.name);
    if (t.shape.size() > 255) throw Error(ErrorCode::ProtocolError, "too many dimensions");
    body.push_back(static_cast<std::uint8_t>(t.shape.size()));
    std::size_t count = 1;
    for (auto d : t.shape) {
      put<std::uint32_t>(body, static_cast<std::uint32_t>(d));
      count *= d;
    }
    if (count != t.values.size())
      throw Error(ErrorCode::ProtocolError, "tensor " + t.name + " shape disagrees with values");
  }
  for (const auto& t : message.tensors)
    for (double v : t.values) put<std::uint64_t>(body, std::bit_cast<std::uint64_t>(v));

  std::vector<std::uint8_t> frame;
  frame.reserve(body.size() + 4);
  put<std::uint32_t>(frame, static_cast<std::uint32_t>(body.size()));
  frame.insert(frame.end(), body.begin(), body.end());
  return frame;
}

Message decode(const std::vector<std::uint8_t>& frame) {
  Reader r(frame);
  const auto length = r.get<std::uint32_t>();
  if (length != r.remaining()) throw Error(ErrorCode::ProtocolError, "frame length mismatch");
  Message m;
  const auto tag = r.get<std::uint8_t>();
  if (tag < 0x01 || tag > 0x04)
    throw Error(ErrorCode::ProtocolError, "unknown message tag " + std::to_string(tag));
  m.type = static_cast<MessageType>(tag);
  m.round = r.get<std::uint64_t>();
  m.learner = r.get_string();
  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    model::Tensor t;
    t.name = r.get_string();
    const auto ndim = r.get<std::uint8_t>();
    std::size_t n = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      t.shape.push_back(r.get<std::uint32_t>());
      n *= t.shape.back();
    }
    if (n > r.remaining() / 8) throw Error(ErrorCode::ProtocolError, "truncated payload");
    t.values.resize(n);
    m.tensors.push_back(std::move(t));
  }
  for (auto& t : m.tensors)
    for (auto& v : t.values) v = std::bit_cast<double>(r.get<std::uint64_t>());
  if (r.remaining() != 0) throw Error(ErrorCode::ProtocolError, "trailing bytes in frame");
  return m;
}

}  // namespace fedint::wire
