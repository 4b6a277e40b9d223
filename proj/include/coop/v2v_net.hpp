#pragma once

// Simulated V2V broadcast channel and the Basic Safety Message wire record.
//
// Wire layout, 48 bytes, little-endian:
//   0  u8   version (1)
//   1  u8   flags: bit0 intent present, bit1 intent value
//   2  u16  CRC-16/CCITT-FALSE over bytes 4..47
//   4  u32  sender_id
//   8  u32  seq
//   12 u64  timestamp_ms
//   20 f64  x (m)
//   28 f64  y (m)
//   36 f32  theta (rad)
//   40 f32  speed (m/s)
//   44 u16  length (mm)
//   46 u16  width (mm)

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <vector>

#include "coop/error.hpp"
#include "coop/risk_field.hpp"

namespace coop {

/// Fields are held at wire precision so a record survives encode/decode unchanged.
struct BsmMessage {
  std::uint32_t sender_id = 0;
  std::uint32_t seq = 0;
  std::uint64_t timestamp_ms = 0;
  double x = 0.0, y = 0.0;
  float theta = 0.0f;
  float speed = 0.0f;
  std::uint16_t length_mm = 0, width_mm = 0;
  std::optional<bool> intent;  // lane change announced

  bool operator==(const BsmMessage&) const = default;

  static BsmMessage from_state(const VehicleState& v, std::uint32_t seq, std::uint64_t t_ms,
                               std::optional<bool> intent = std::nullopt) {
    BsmMessage m;
    m.sender_id = static_cast<std::uint32_t>(v.id);
    m.seq = seq;
    m.timestamp_ms = t_ms;
    m.x = v.pose.x;
    m.y = v.pose.y;
    m.theta = static_cast<float>(v.pose.theta);
    m.speed = static_cast<float>(v.speed);
    m.length_mm = static_cast<std::uint16_t>(std::clamp(std::lround(v.length * 1000.0), 1L, 65535L));
    m.width_mm = static_cast<std::uint16_t>(std::clamp(std::lround(v.width * 1000.0), 1L, 65535L));
    m.intent = intent;
    return m;
  }

  /// Sender state extrapolated at constant velocity to `t_ms`.
  VehicleState to_state(std::uint64_t t_ms) const {
    const double dt = (static_cast<double>(t_ms) - static_cast<double>(timestamp_ms)) / 1000.0;
    VehicleState v;
    v.id = static_cast<int>(sender_id);
    v.speed = speed;
    v.length = length_mm / 1000.0;
    v.width = width_mm / 1000.0;
    v.pose = Pose2D(x + speed * dt * std::cos(theta), y + speed * dt * std::sin(theta), theta);
    return v;
  }
};

inline constexpr std::size_t kBsmSize = 48;
inline constexpr std::uint8_t kBsmVersion = 1;

inline std::uint16_t crc16_ccitt(std::span<const std::uint8_t> data) {
  std::uint16_t crc = 0xFFFF;
  for (std::uint8_t b : data) {
    crc ^= static_cast<std::uint16_t>(b) << 8;
    for (int i = 0; i < 8; ++i) crc = (crc & 0x8000) ? static_cast<std::uint16_t>((crc << 1) ^ 0x1021) : static_cast<std::uint16_t>(crc << 1);
  }
  return crc;
}

namespace detail {

static_assert(std::endian::native == std::endian::little, "wire codec assumes a little-endian host");

template <typename T>
void put(std::array<std::uint8_t, kBsmSize>& buf, std::size_t off, T v) {
  std::memcpy(buf.data() + off, &v, sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> buf, std::size_t off) {
  T v;
  std::memcpy(&v, buf.data() + off, sizeof(T));
  return v;
}

}  // namespace detail

inline std::array<std::uint8_t, kBsmSize> encode(const BsmMessage& m) {
  std::array<std::uint8_t, kBsmSize> buf{};
  buf[0] = kBsmVersion;
  buf[1] = static_cast<std::uint8_t>((m.intent ? 1u : 0u) | ((m.intent && *m.intent) ? 2u : 0u));
  detail::put(buf, 4, m.sender_id);
  detail::put(buf, 8, m.seq);
  detail::put(buf, 12, m.timestamp_ms);
  detail::put(buf, 20, m.x);
  detail::put(buf, 28, m.y);
  detail::put(buf, 36, m.theta);
  detail::put(buf, 40, m.speed);
  detail::put(buf, 44, m.length_mm);
  detail::put(buf, 46, m.width_mm);
  detail::put(buf, 2, crc16_ccitt(std::span<const std::uint8_t>(buf).subspan(4)));
  return buf;
}

inline BsmMessage decode(std::span<const std::uint8_t> buf) {
  if (buf.size() != kBsmSize) throw Error(ErrorCode::DecodeError, "BSM record must be 48 bytes");
  if (buf[0] != kBsmVersion) throw Error(ErrorCode::DecodeError, "unsupported BSM version");
  if (buf[1] & ~0x3u) throw Error(ErrorCode::DecodeError, "reserved BSM flag bits set");
  if (detail::get<std::uint16_t>(buf, 2) != crc16_ccitt(buf.subspan(4))) {
    throw Error(ErrorCode::DecodeError, "BSM checksum mismatch");
  }
  BsmMessage m;
  m.sender_id = detail::get<std::uint32_t>(buf, 4);
  m.seq = detail::get<std::uint32_t>(buf, 8);
  m.timestamp_ms = detail::get<std::uint64_t>(buf, 12);
  m.x = detail::get<double>(buf, 20);
  m.y = detail::get<double>(buf, 28);
  m.theta = detail::get<float>(buf, 36);
  m.speed = detail::get<float>(buf, 40);
  m.length_mm = detail::get<std::uint16_t>(buf, 44);
  m.width_mm = detail::get<std::uint16_t>(buf, 46);
  if (buf[1] & 1u) m.intent = (buf[1] & 2u) != 0;
  return m;
}

struct ChannelModel {
  double range = 200.0;       // m
  std::int64_t period_ms = 100;
  double loss_prob = 0.0;
  std::int64_t latency_ms = 20;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(range > 0)) throw Error(ErrorCode::ValidationError, "channel range must be positive");
    if (period_ms <= 0) throw Error(ErrorCode::ValidationError, "BSM period must be positive");
    if (!(loss_prob >= 0 && loss_prob < 1)) throw Error(ErrorCode::ValidationError, "loss_prob must be in [0, 1)");
    if (latency_ms < 0) throw Error(ErrorCode::ValidationError, "latency must be non-negative");
  }
};

struct Delivery {
  int receiver = 0;
  BsmMessage msg;
  std::int64_t deliver_at = 0;  // ms
};

struct DeliveryLogRow {
  std::int64_t t_send = 0, t_deliver = 0;
  int sender = 0, receiver = 0;
  bool dropped = false;
};

/// Single logical broadcast channel. Deliveries come out in (deliver_at, send order).
class Channel {
 public:
  explicit Channel(ChannelModel model) : model_(model), rng_(model.seed) { model_.validate(); }

  const ChannelModel& model() const { return model_; }

  /// Broadcasts `sender` to every other vehicle within range. Returns the messages
  /// that survived the loss draw.
  std::vector<Delivery> broadcast(const VehicleState& sender, std::span<const VehicleState> vehicles,
                                  std::int64_t t_ms, std::optional<bool> intent = std::nullopt) {
    std::uint32_t& seq = seq_[sender.id];
    const BsmMessage msg = BsmMessage::from_state(sender, ++seq, static_cast<std::uint64_t>(t_ms), intent);
    std::vector<Delivery> sent;
    std::bernoulli_distribution lost(model_.loss_prob);
    for (const auto& rx : vehicles) {
      if (rx.id == sender.id) continue;
      if ((rx.position() - sender.position()).norm() > model_.range) continue;
      const bool dropped = model_.loss_prob > 0 && lost(rng_);
      log_.push_back({t_ms, t_ms + model_.latency_ms, sender.id, rx.id, dropped});
      if (dropped) continue;
      Delivery d{rx.id, msg, t_ms + model_.latency_ms};
      pending_.emplace(std::pair{d.deliver_at, order_++}, d);
      sent.push_back(d);
    }
    return sent;
  }

  /// Removes and returns every pending delivery due at or before `now_ms`.
  std::vector<Delivery> deliver(std::int64_t now_ms) {
    std::vector<Delivery> out;
    auto it = pending_.begin();
    while (it != pending_.end() && it->first.first <= now_ms) {
      out.push_back(it->second);
      it = pending_.erase(it);
    }
    return out;
  }

  const std::vector<DeliveryLogRow>& log() const { return log_; }

 private:
  ChannelModel model_;
  std::mt19937_64 rng_;
  std::map<int, std::uint32_t> seq_;
  std::map<std::pair<std::int64_t, std::uint64_t>, Delivery> pending_;
  std::uint64_t order_ = 0;
  std::vector<DeliveryLogRow> log_;
};

inline void write_delivery_log(std::ostream& out, std::span<const DeliveryLogRow> rows) {
  out << "t_send,t_deliver,sender,receiver,dropped\n";
  for (const auto& r : rows) {
    out << r.t_send << ',' << r.t_deliver << ',' << r.sender << ',' << r.receiver << ',' << (r.dropped ? 1 : 0)
        << '\n';
  }
}

}  // namespace coop
